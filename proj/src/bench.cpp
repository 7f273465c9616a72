#include "arisopt/bench.hpp"

#include "arisopt/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace arisopt {

const char* axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::N: return "N";
        case SweepAxis::TauKDb: return "tau_k_db";
        case SweepAxis::TauR: return "tau_r";
        case SweepAxis::AMax: return "a_max";
        case SweepAxis::Alpha: return "alpha";
    }
    return "?";
}

SweepAxis axis_from_name(const std::string& name) {
    if (name == "N") return SweepAxis::N;
    if (name == "tau_k_db") return SweepAxis::TauKDb;
    if (name == "tau_r") return SweepAxis::TauR;
    if (name == "a_max") return SweepAxis::AMax;
    if (name == "alpha") return SweepAxis::Alpha;
    throw std::invalid_argument("unknown sweep axis '" + name +
                                "' (expected N, tau_k_db, tau_r, a_max or alpha)");
}

void validate_sweep_spec(const SweepSpec& spec) {
    if (spec.values.empty()) throw std::invalid_argument("sweep values must be non-empty");
    for (std::size_t i = 1; i < spec.values.size(); ++i)
        if (!(spec.values[i] > spec.values[i - 1]))
            throw std::invalid_argument("sweep values must be strictly increasing");
    if (spec.trials < 1) throw std::invalid_argument("sweep trials must be >= 1");
    if (spec.schemes.empty()) throw std::invalid_argument("sweep needs at least one scheme");
}

SystemConfig apply_axis(const SystemConfig& cfg, SweepAxis axis, double value) {
    SystemConfig out = cfg;
    switch (axis) {
        case SweepAxis::N: {
            double rounded = std::round(value);
            if (std::abs(value - rounded) > 1e-9 || rounded < 1.0)
                throw std::invalid_argument("N axis values must be positive integers");
            out.n = static_cast<int>(rounded);
            break;
        }
        case SweepAxis::TauKDb:
            out.tau_k_db.assign(1, value);
            break;
        case SweepAxis::TauR:
            if (!(value > 0.0))
                throw std::invalid_argument("tau_r axis values are linear and must be > 0");
            out.tau_r_db = 10.0 * std::log10(value);
            break;
        case SweepAxis::AMax:
            out.a_max = value;
            break;
        case SweepAxis::Alpha:
            out.alpha = value;
            break;
    }
    validate_config(out);
    return out;
}

std::uint64_t cell_seed(std::uint64_t base_seed, SweepAxis axis, double value) {
    std::uint64_t h = splitmix64(base_seed ^ fnv1a64(axis_name(axis)));
    return splitmix64(h ^ std::bit_cast<std::uint64_t>(value));
}

ResultRow run_cell(const SystemConfig& cfg, SweepAxis axis, double value, Scheme scheme,
                   int trial) {
    ResultRow row;
    row.scheme = scheme;
    row.axis_value = value;
    row.trial = trial;

    SystemConfig cell = apply_axis(cfg, axis, value);
    cell.seed = cell_seed(cfg.seed, axis, value);
    try {
        ChannelSet ch = generate_channels(cell, static_cast<std::uint64_t>(trial));
        RunResult res = run_benchmark(cell, ch, scheme);
        row.ee = res.metrics.ee;
        row.sum_rate = res.metrics.sum_rate;
        row.p_total_watts = res.metrics.p_total;
        row.iterations = res.iterations;
        row.converged = res.converged;
    } catch (const InitializationFailedError&) {
        row.infeasible = true;
    } catch (const InfeasibleError&) {
        row.infeasible = true;
    }
    return row;
}

const char* result_header() {
    return "scheme,axis_value,trial,ee,sum_rate,p_total_watts,iterations,converged,infeasible";
}

std::string format_result_row(const ResultRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.12g,%d,%.12g,%.12g,%.12g,%d,%d,%d",
                  scheme_name(row.scheme), row.axis_value, row.trial, row.ee, row.sum_rate,
                  row.p_total_watts, row.iterations, row.converged ? 1 : 0,
                  row.infeasible ? 1 : 0);
    return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_row(const std::string& line, ResultRow& row) {
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 9) return false;
    try {
        row.scheme = scheme_from_name(f[0]);
        row.axis_value = std::stod(f[1]);
        row.trial = std::stoi(f[2]);
        row.ee = std::stod(f[3]);
        row.sum_rate = std::stod(f[4]);
        row.p_total_watts = std::stod(f[5]);
        row.iterations = std::stoi(f[6]);
        row.converged = std::stoi(f[7]) != 0;
        row.infeasible = std::stoi(f[8]) != 0;
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

/// Cell identity string; axis values go through the same %.12g as the file
/// format so resume matching never depends on float reparsing quirks.
std::string cell_key(Scheme scheme, double value, int trial) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s|%.12g|%d", scheme_name(scheme), value, trial);
    return buf;
}

} // namespace

std::vector<ResultRow> read_result_rows(const std::string& path) {
    std::vector<ResultRow> rows;
    std::ifstream in(path);
    if (!in) return rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ResultRow row;
        if (parse_row(line, row)) rows.push_back(row);  // header and partial lines drop out here
    }
    return rows;
}

void run_sweep(const SystemConfig& cfg, const SweepSpec& spec, const std::string& out_path,
               int jobs) {
    validate_sweep_spec(spec);
    for (double value : spec.values) apply_axis(cfg, spec.axis, value);  // fail fast

    std::map<std::string, ResultRow> done;
    for (const ResultRow& row : read_result_rows(out_path))
        done[cell_key(row.scheme, row.axis_value, row.trial)] = row;

    struct Cell {
        double value;
        Scheme scheme;
        int trial;
    };
    std::vector<Cell> pending;
    for (double value : spec.values)
        for (Scheme scheme : spec.schemes)
            for (int trial = 0; trial < spec.trials; ++trial)
                if (!done.count(cell_key(scheme, value, trial)))
                    pending.push_back({value, scheme, trial});

    std::mutex sink_mutex;
    std::ofstream append(out_path, std::ios::app);
    if (!append) throw std::runtime_error("cannot open results file '" + out_path + "'");
    append.seekp(0, std::ios::end);
    if (append.tellp() == 0) append << result_header() << "\n";

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const Cell& c = pending[i];
            ResultRow row = run_cell(cfg, spec.axis, c.value, c.scheme, c.trial);
            std::lock_guard<std::mutex> lock(sink_mutex);
            append << format_result_row(row) << "\n" << std::flush;
            done[cell_key(row.scheme, row.axis_value, row.trial)] = row;
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1 || pending.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    append.close();

    // canonical rewrite: exactly the requested cells, fixed order, atomic swap
    std::string tmp_path = out_path + ".tmp";
    {
        std::ofstream tmp(tmp_path, std::ios::trunc);
        if (!tmp) throw std::runtime_error("cannot open temp file '" + tmp_path + "'");
        tmp << result_header() << "\n";
        for (double value : spec.values)
            for (Scheme scheme : spec.schemes)
                for (int trial = 0; trial < spec.trials; ++trial) {
                    auto it = done.find(cell_key(scheme, value, trial));
                    if (it == done.end())
                        throw std::runtime_error("sweep bookkeeping lost a cell; results file not finalized");
                    tmp << format_result_row(it->second) << "\n";
                }
    }
    if (std::rename(tmp_path.c_str(), out_path.c_str()) != 0)
        throw std::runtime_error("cannot replace results file '" + out_path + "'");
}

std::vector<AggregateRow> aggregate_results(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw EmptyInputError("no result rows to aggregate");

    struct Acc {
        std::vector<double> ee, rate, power;
        int excluded = 0;
    };
    std::map<std::pair<double, int>, Acc> groups;  // (axis value, scheme order)
    for (const ResultRow& row : rows) {
        Acc& acc = groups[{row.axis_value, static_cast<int>(row.scheme)}];
        if (row.infeasible) {
            ++acc.excluded;
        } else {
            acc.ee.push_back(row.ee);
            acc.rate.push_back(row.sum_rate);
            acc.power.push_back(row.p_total_watts);
        }
    }

    std::vector<AggregateRow> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        AggregateRow a;
        a.axis_value = key.first;
        a.scheme = static_cast<Scheme>(key.second);
        a.n_used = static_cast<int>(acc.ee.size());
        a.n_excluded = acc.excluded;
        a.all_infeasible = acc.ee.empty();
        if (!a.all_infeasible) {
            auto mean = [](const std::vector<double>& v) {
                double s = 0.0;
                for (double x : v) s += x;
                return s / static_cast<double>(v.size());
            };
            a.ee_mean = mean(acc.ee);
            a.sum_rate_mean = mean(acc.rate);
            a.p_total_watts_mean = mean(acc.power);
            if (acc.ee.size() >= 2) {
                double var = 0.0;
                for (double x : acc.ee) var += (x - a.ee_mean) * (x - a.ee_mean);
                var /= static_cast<double>(acc.ee.size() - 1);
                a.ee_stderr = std::sqrt(var / static_cast<double>(acc.ee.size()));
            }
        }
        out.push_back(a);
    }
    return out;
}

void write_aggregate(const std::vector<AggregateRow>& rows, std::ostream& os) {
    os << "scheme,axis_value,n_used,n_excluded,all_infeasible,ee_mean,ee_stderr,"
          "sum_rate_mean,p_total_watts_mean\n";
    char buf[256];
    for (const AggregateRow& a : rows) {
        if (a.all_infeasible) {
            std::snprintf(buf, sizeof(buf), "%s,%.12g,%d,%d,1,,,,", scheme_name(a.scheme),
                          a.axis_value, a.n_used, a.n_excluded);
        } else {
            std::snprintf(buf, sizeof(buf), "%s,%.12g,%d,%d,0,%.12g,%.12g,%.12g,%.12g",
                          scheme_name(a.scheme), a.axis_value, a.n_used, a.n_excluded, a.ee_mean,
                          a.ee_stderr, a.sum_rate_mean, a.p_total_watts_mean);
        }
        os << buf << "\n";
    }
}

} // namespace arisopt
