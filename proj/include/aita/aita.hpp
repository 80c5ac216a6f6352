#pragma once

#include "aita/alloc.hpp"
#include "aita/counterfactual.hpp"
#include "aita/explanation.hpp"
#include "aita/format.hpp"
#include "aita/io.hpp"
#include "aita/negotiation.hpp"
#include "aita/noise.hpp"
