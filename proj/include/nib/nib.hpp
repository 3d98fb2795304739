#pragma once

#include "nib/common.hpp"
#include "nib/random.hpp"
#include "nib/noise.hpp"
#include "nib/dataset.hpp"
#include "nib/losses.hpp"
#include "nib/classifier.hpp"
#include "nib/transition.hpp"
#include "nib/selection.hpp"
#include "nib/metrics.hpp"
#include "nib/config.hpp"
#include "nib/paradigms.hpp"
#include "nib/runner.hpp"
