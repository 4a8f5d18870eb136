#pragma once

// Umbrella header: the whole library.

#include "deepgreen/corpus.hpp"
#include "deepgreen/dictionary.hpp"
#include "deepgreen/econ.hpp"
#include "deepgreen/error.hpp"
#include "deepgreen/indicators.hpp"
#include "deepgreen/judge_a.hpp"
#include "deepgreen/judge_b.hpp"
#include "deepgreen/llm/backend.hpp"
#include "deepgreen/llm/batch.hpp"
#include "deepgreen/llm/http_backend.hpp"
#include "deepgreen/llm/prompt.hpp"
#include "deepgreen/llm/retrieval.hpp"
#include "deepgreen/pipeline/config.hpp"
#include "deepgreen/pipeline/stages.hpp"
#include "deepgreen/pipeline/synthetic.hpp"
#include "deepgreen/segment.hpp"
#include "deepgreen/sequences.hpp"
#include "deepgreen/validate.hpp"
