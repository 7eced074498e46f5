#include "socd/eval/sweep.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace socd::eval {

std::vector<SweepRow> run_sweep(const env::AnyEnvConfig& config, const SweepSpec& spec,
                                const std::function<void(const SweepRow&)>& progress) {
  std::vector<SweepRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto emit = [&](SweepRow row) {
    if (progress) progress(row);
    rows.push_back(std::move(row));
  };
  for (const auto& [name, factory] : spec.policies) {
    for (std::size_t b = 0; b < spec.budgets.size(); ++b) {
      SweepRow row{name, spec.budgets[b], nan, nan, nan, nan, "ok"};
      try {
        env::AnyEnvConfig cell = config;
        cell.set_total_budget(spec.budgets[b]);
        policy::PolicyPtr pol = factory(cell);
        const EvalReport rep = evaluate(*pol, cell, spec.eval, derive_seed(spec.seed, "sweep", b));
        row.d_mean = rep.throughput.mean;
        row.d_std = rep.throughput.std;
        row.e_mean = rep.consumption.mean;
        row.e_std = rep.consumption.std;
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      emit(std::move(row));
    }
  }
  if (spec.behavior) {
    for (double budget : spec.budgets) {
      emit({"behavior", budget, spec.behavior->throughput.mean, spec.behavior->throughput.std,
            spec.behavior->consumption.mean, spec.behavior->consumption.std, "ok"});
    }
  }
  return rows;
}

namespace {

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataFormatError("sweep table: bad number '" + s + "'");
  return v;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "policy,E_0,D_mean,D_std,E_mean,E_std,status\n";
  for (const auto& r : rows) {
    ss << field(r.policy) << ',' << r.budget << ',' << r.d_mean << ',' << r.d_std << ',' << r.e_mean << ','
       << r.e_std << ',' << field(r.status) << '\n';
  }
  return ss.str();
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << sweep_csv(rows);
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("policy,E_0,", 0) != 0) {
    throw DataFormatError("sweep table: missing header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw DataFormatError("sweep table: expected 7 columns");
    rows.push_back({f[0], parse_real(f[1]), parse_real(f[2]), parse_real(f[3]), parse_real(f[4]),
                    parse_real(f[5]), f[6]});
  }
  return rows;
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sweep_csv(ss.str());
}

}  // namespace socd::eval
