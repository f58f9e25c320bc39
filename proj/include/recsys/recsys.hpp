#pragma once

// Umbrella header.

#include "recsys/artifacts.hpp"
#include "recsys/bm25.hpp"
#include "recsys/collaborative.hpp"
#include "recsys/errors.hpp"
#include "recsys/ingest.hpp"
#include "recsys/metrics.hpp"
#include "recsys/mvn.hpp"
#include "recsys/preference.hpp"
#include "recsys/quantile.hpp"
#include "recsys/serialize.hpp"
#include "recsys/types.hpp"
