// Umbrella header for the rtc library.
#pragma once

#include "rtc/bench.hpp"
#include "rtc/degrade.hpp"
#include "rtc/eval.hpp"
#include "rtc/experiment.hpp"
#include "rtc/io.hpp"
#include "rtc/regularizers.hpp"
#include "rtc/solver.hpp"
#include "rtc/synthetic.hpp"
#include "rtc/tensor.hpp"
#include "rtc/transforms.hpp"
