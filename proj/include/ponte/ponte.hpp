#pragma once

#include "ponte/backend/batch.hpp"
#include "ponte/backend/cache.hpp"
#include "ponte/backend/embedding.hpp"
#include "ponte/backend/http.hpp"
#include "ponte/backend/mock.hpp"
#include "ponte/clustering.hpp"
#include "ponte/harness/eval.hpp"
#include "ponte/harness/project.hpp"
#include "ponte/harness/records.hpp"
#include "ponte/harness/report.hpp"
#include "ponte/harness/synthetic.hpp"
#include "ponte/metrics.hpp"
#include "ponte/projection.hpp"
#include "ponte/prompting.hpp"
