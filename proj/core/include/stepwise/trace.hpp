#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "stepwise/backend.hpp"
#include "stepwise/orchestrator.hpp"

namespace stepwise {

struct TraceOptions {
  bool include_config = true;
};

/// JSON Lines: one record per trajectory step, ordered by "idx", each with
/// {"idx","origin","tokens","logprobs","finish"} plus accounting fields, an
/// "events" array, and any discarded "draft" or "judge" verdict; then one
/// trailing {"summary": {...}} record.
std::string write_trace(const Session& session, const TraceOptions& options = {});

/// Inverse of write_trace. Accepts minimal records (only the five core
/// fields); ratios and hesitation flags absent from a record are recomputed
/// from its tokens. Throws SchemaError naming the offending line.
Session parse_trace(std::string_view jsonl);

Session load_trace(const std::string& path);
void save_trace(const std::string& path, const Session& session, const TraceOptions& options = {});

struct ReplayBackends {
  std::unique_ptr<ReplayBackend> srm;
  std::unique_ptr<ReplayBackend> lrm;
};

/// Backends that answer every call the recorded session made, so rerunning
/// the same strategy and config reproduces it.
ReplayBackends make_replay_backends(const Session& recorded);

}  // namespace stepwise
