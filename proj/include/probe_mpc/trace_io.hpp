#pragma once

#include <ostream>

#include "probe_mpc/monte_carlo.hpp"
#include "probe_mpc/simulator.hpp"

namespace probe_mpc {

/// JSON-lines episode trace: one record per vehicle per step plus one
/// planner diagnostics record per step.
void write_trace_jsonl(const EpisodeTrace& trace, std::ostream& out);

/// Per-episode metrics CSV (Table-style columns plus variant/episode).
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_row(int episode, Variant variant,
                           const EpisodeMetrics& metrics, std::ostream& out);

/// Aggregate campaign CSV, one row per variant.
void write_campaign_csv(const CampaignResult& result, std::ostream& out);

}  // namespace probe_mpc
