#pragma once

#include "rfdna/errors.hpp"
#include "rfdna/seed.hpp"
#include "rfdna/signal.hpp"
#include "rfdna/tfr.hpp"
#include "rfdna/fingerprint.hpp"
#include "rfdna/fingerprint_store.hpp"
#include "rfdna/iq_io.hpp"
#include "rfdna/stats.hpp"
#include "rfdna/featsel.hpp"
#include "rfdna/feature_map.hpp"
#include "rfdna/svm.hpp"
#include "rfdna/modelsel.hpp"
#include "rfdna/cohort.hpp"
#include "rfdna/dataset.hpp"
#include "rfdna/report.hpp"
#include "rfdna/harness.hpp"
