#pragma once

#include "anthem/analysis/agreement.hpp"
#include "anthem/analysis/correlation.hpp"
#include "anthem/analysis/kmeans.hpp"
#include "anthem/analysis/report.hpp"
#include "anthem/analysis/selection.hpp"
#include "anthem/analysis/standardize.hpp"
