#pragma once

// Everything except the HTTP backend, which pulls in cpp-httplib and OpenSSL
// and lives in "dlm/http_backend.hpp".

#include "dlm/error.hpp"
#include "dlm/rng.hpp"
#include "dlm/features.hpp"
#include "dlm/rmab.hpp"
#include "dlm/reward_dsl.hpp"
#include "dlm/policy.hpp"
#include "dlm/tasks.hpp"
#include "dlm/outcome.hpp"
#include "dlm/eval.hpp"
#include "dlm/llm.hpp"
#include "dlm/dlm_loop.hpp"
#include "dlm/oracle_search.hpp"

namespace dlm {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace dlm
