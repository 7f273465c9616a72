#pragma once

#include "arisopt/baselines.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace arisopt {

struct EmptyInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SweepAxis { N, TauKDb, TauR, AMax, Alpha };

const char* axis_name(SweepAxis a);
SweepAxis axis_from_name(const std::string& name);

struct SweepSpec {
    SweepAxis axis = SweepAxis::N;
    std::vector<double> values;   ///< strictly increasing; tau_r values are linear
    int trials = 20;
    std::vector<Scheme> schemes;
};

/// Throws std::invalid_argument on an empty/unsorted value list or trials < 1.
void validate_sweep_spec(const SweepSpec& spec);

/// Copy of cfg with one swept parameter replaced; validates the result.
/// The N axis requires integral values.
SystemConfig apply_axis(const SystemConfig& cfg, SweepAxis axis, double value);

/// Seed for one sweep cell; depends only on (base seed, axis value), so cells
/// are reproducible regardless of scheduling or completion order.
std::uint64_t cell_seed(std::uint64_t base_seed, SweepAxis axis, double value);

struct ResultRow {
    Scheme scheme = Scheme::ActiveEE;
    double axis_value = 0.0;
    int trial = 0;
    double ee = 0.0;
    double sum_rate = 0.0;
    double p_total_watts = 0.0;
    int iterations = 0;
    bool converged = false;
    bool infeasible = false;   ///< the run failed (no feasible point); metrics are zeros
};

/// Run one (axis value, scheme, trial) cell; run failures are folded into the
/// row's infeasible flag rather than thrown.
ResultRow run_cell(const SystemConfig& cfg, SweepAxis axis, double value, Scheme scheme,
                   int trial);

std::string format_result_row(const ResultRow& row);
const char* result_header();

/// Parse rows from a results file; tolerates a trailing partial line (crash
/// leftovers). Missing file yields an empty vector.
std::vector<ResultRow> read_result_rows(const std::string& path);

/// Monte-Carlo sweep with crash-safe resume: completed cells found in
/// out_path are skipped, fresh rows are appended as they finish, and the file
/// is finally rewritten in canonical order (atomic replace). Two runs of the
/// same (config, spec) produce byte-identical files.
void run_sweep(const SystemConfig& cfg, const SweepSpec& spec, const std::string& out_path,
               int jobs = 1);

struct AggregateRow {
    Scheme scheme = Scheme::ActiveEE;
    double axis_value = 0.0;
    int n_used = 0;
    int n_excluded = 0;        ///< infeasible rows left out of the means
    bool all_infeasible = false;
    double ee_mean = 0.0;
    double ee_stderr = 0.0;
    double sum_rate_mean = 0.0;
    double p_total_watts_mean = 0.0;
};

/// Per (scheme, axis value): mean, standard error and counts over feasible
/// rows. Throws EmptyInputError when rows is empty.
std::vector<AggregateRow> aggregate_results(const std::vector<ResultRow>& rows);

void write_aggregate(const std::vector<AggregateRow>& rows, std::ostream& os);

} // namespace arisopt
