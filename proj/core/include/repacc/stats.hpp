#pragma once

#include "repacc/stats/aggregate.hpp"
#include "repacc/stats/agreement.hpp"
#include "repacc/stats/classifiers.hpp"
#include "repacc/stats/descriptive.hpp"
#include "repacc/stats/overlap.hpp"
#include "repacc/stats/regression.hpp"
#include "repacc/stats/resampling.hpp"
#include "repacc/stats/test_result.hpp"
#include "repacc/stats/transitions.hpp"
#include "repacc/stats/wilcoxon.hpp"
