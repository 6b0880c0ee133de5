#pragma once

#include "mmrec/config.hpp"
#include "mmrec/core.hpp"
#include "mmrec/error.hpp"
#include "mmrec/evaluator.hpp"
#include "mmrec/feature_store.hpp"
#include "mmrec/fusion.hpp"
#include "mmrec/ingestion.hpp"
#include "mmrec/recommenders/bprmf.hpp"
#include "mmrec/recommenders/frozen_graph.hpp"
#include "mmrec/recommenders/itemknn.hpp"
#include "mmrec/recommenders/lightgcn.hpp"
#include "mmrec/recommenders/persistence.hpp"
#include "mmrec/recommenders/vbpr.hpp"
#include "mmrec/report.hpp"
#include "mmrec/runner.hpp"
#include "mmrec/splitter.hpp"
#include "mmrec/synthetic.hpp"
