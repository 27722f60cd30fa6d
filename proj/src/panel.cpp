#include "feame/panel.hpp"

#include "feame/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace feame {

Panel::Panel(std::vector<Individual> individuals, int num_alternatives, int num_covariates)
    : individuals_(std::move(individuals)),
      num_alternatives_(num_alternatives),
      num_covariates_(num_covariates) {
  if (num_alternatives_ < 2) {
    throw SchemaError("panel needs at least two alternatives");
  }
  if (num_covariates_ < 0) {
    throw SchemaError("negative covariate width");
  }
  for (const auto& ind : individuals_) {
    if (ind.y.size() < 2) {
      throw SchemaError("individual '" + ind.id + "' has fewer than two periods");
    }
    for (int v : ind.y) {
      if (v < 0 || v >= num_alternatives_) {
        throw SchemaError("choice " + std::to_string(v) + " of individual '" + ind.id +
                          "' outside {0.." + std::to_string(num_alternatives_ - 1) + "}");
      }
    }
    if (ind.x.size() != ind.y.size() * static_cast<std::size_t>(num_covariates_)) {
      throw SchemaError("covariate block of individual '" + ind.id + "' has the wrong size");
    }
    if (ind.d1 < 0) {
      throw SchemaError("negative initial duration for individual '" + ind.id + "'");
    }
  }
}

std::span<const double> Panel::x(std::size_t i, std::size_t t) const {
  const auto k = static_cast<std::size_t>(num_covariates_);
  return std::span<const double>(individuals_[i].x).subspan(t * k, k);
}

std::size_t Panel::common_length() const {
  if (individuals_.empty()) return 0;
  const std::size_t T = individuals_.front().length();
  for (const auto& ind : individuals_) {
    if (ind.length() != T) return 0;
  }
  return T;
}

std::size_t Panel::total_observations() const {
  std::size_t n = 0;
  for (const auto& ind : individuals_) n += ind.length();
  return n;
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  for (auto& field : out) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
  }
  return out;
}

long long parse_integer(const std::string& s, const std::string& column, std::size_t line_no) {
  long long v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw SchemaError("line " + std::to_string(line_no) + ": column '" + column +
                      "' is not an integer: '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const std::string& column, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("line " + std::to_string(line_no) + ": column '" + column +
                      "' is not a finite number: '" + s + "'");
  }
}

struct Row {
  long long t;
  int y;
  std::vector<double> x;
  int d1;
};

}  // namespace

Panel load_panel(std::istream& source, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(source, line)) {
    throw SchemaError("empty CSV input");
  }
  const auto header = split_csv_line(line);
  auto find_col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int id_col = find_col(schema.id);
  const int t_col = find_col(schema.t);
  const int y_col = find_col(schema.y);
  for (auto [col, name] : {std::pair{id_col, schema.id}, {t_col, schema.t}, {y_col, schema.y}}) {
    if (col < 0) throw SchemaError("missing mandatory column '" + name + "'");
  }
  const int d1_col = find_col(schema.d1);

  // x1..xK, contiguous from 1
  std::vector<int> x_cols;
  for (int k = 1;; ++k) {
    const int c = find_col(schema.covariate_prefix + std::to_string(k));
    if (c < 0) break;
    x_cols.push_back(c);
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  std::size_t line_no = 1;
  int max_y = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    Row r;
    r.t = parse_integer(f[t_col], schema.t, line_no);
    const long long y = parse_integer(f[y_col], schema.y, line_no);
    if (y < 0 || (schema.num_alternatives > 0 && y >= schema.num_alternatives)) {
      throw SchemaError("line " + std::to_string(line_no) + ": y=" + std::to_string(y) +
                        " outside {0.." +
                        (schema.num_alternatives > 0 ? std::to_string(schema.num_alternatives - 1)
                                                     : std::string("J")) +
                        "}");
    }
    r.y = static_cast<int>(y);
    max_y = std::max(max_y, r.y);
    r.x.reserve(x_cols.size());
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      r.x.push_back(parse_real(f[x_cols[k]], header[x_cols[k]], line_no));
    }
    r.d1 = 0;
    if (d1_col >= 0 && !f[d1_col].empty()) {
      const long long d = parse_integer(f[d1_col], schema.d1, line_no);
      if (d < 0) throw SchemaError("line " + std::to_string(line_no) + ": negative d1");
      r.d1 = static_cast<int>(d);
    }
    const auto& id = f[id_col];
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(std::move(r));
  }

  std::vector<Individual> individuals;
  individuals.reserve(order.size());
  for (const auto& id : order) {
    auto& rs = rows[id];
    std::sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    Individual ind;
    ind.id = id;
    ind.t0 = static_cast<int>(rs.front().t);
    ind.d1 = rs.front().d1;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      if (k > 0 && rs[k].t != rs[k - 1].t + 1) {
        throw SchemaError("individual '" + id + "': time gap or duplicate between t=" +
                          std::to_string(rs[k - 1].t) + " and t=" + std::to_string(rs[k].t));
      }
      ind.y.push_back(rs[k].y);
      ind.x.insert(ind.x.end(), rs[k].x.begin(), rs[k].x.end());
    }
    individuals.push_back(std::move(ind));
  }
  const int J1 = schema.num_alternatives > 0 ? schema.num_alternatives : std::max(2, max_y + 1);
  return Panel(std::move(individuals), J1, static_cast<int>(x_cols.size()));
}

Panel load_panel_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open panel file '" + path + "'");
  return load_panel(in, schema);
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
  out << "id,t,y";
  for (int k = 1; k <= panel.num_covariates(); ++k) out << ",x" << k;
  out << ",d1\n";
  char buf[64];
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& ind = panel[i];
    for (std::size_t t = 0; t < ind.length(); ++t) {
      out << ind.id << ',' << ind.t0 + static_cast<int>(t) << ',' << ind.y[t];
      for (double v : panel.x(i, t)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
      out << ',';
      if (t == 0) out << ind.d1;
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------- windows

std::vector<int> durations(std::span<const int> y, int d1, int d_max) {
  std::vector<int> d(y.size());
  if (y.empty()) return d;
  d[0] = std::min(d1, d_max);
  for (std::size_t t = 1; t < y.size(); ++t) {
    d[t] = next_duration(y[t - 1], d[t - 1], d_max);
  }
  return d;
}

Panel split_subhistories(const Panel& panel, std::size_t T, int d_max) {
  if (T < 2) throw std::invalid_argument("window length must be at least 2");
  const auto K = static_cast<std::size_t>(panel.num_covariates());
  std::vector<Individual> out;
  for (const auto& ind : panel.individuals()) {
    if (ind.length() < T) continue;
    const auto d = durations(ind.y, ind.d1, d_max);
    for (std::size_t s = 0; s + T <= ind.length(); ++s) {
      Individual w;
      w.t0 = ind.t0 + static_cast<int>(s);
      w.id = ind.id + "#" + std::to_string(w.t0);
      w.y.assign(ind.y.begin() + s, ind.y.begin() + s + T);
      w.x.assign(ind.x.begin() + s * K, ind.x.begin() + (s + T) * K);
      w.d1 = d[s];
      out.push_back(std::move(w));
    }
  }
  return Panel(std::move(out), panel.num_alternatives(), panel.num_covariates());
}

// ---------------------------------------------------------------- frequencies

std::string covariate_key(std::span<const double> x) {
  std::string key;
  char buf[40];
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", x[k]);
    if (k) key.push_back(' ');
    key += buf;
  }
  return key;
}

void HistoryDistribution::add(std::vector<int> y, const std::string& x_key, double weight) {
  if (y.size() != T_) throw std::invalid_argument("history length does not match window length");
  mass_[HistoryKey{std::move(y), x_key}] += weight;
  key_mass_[x_key] += weight;
  total_ += weight;
}

double HistoryDistribution::prob(const std::vector<int>& y, const std::string& x_key) const {
  auto k = key_mass_.find(x_key);
  if (k == key_mass_.end() || k->second <= 0.0) return 0.0;
  auto it = mass_.find(HistoryKey{y, x_key});
  return it == mass_.end() ? 0.0 : it->second / k->second;
}

double HistoryDistribution::key_share(const std::string& x_key) const {
  auto k = key_mass_.find(x_key);
  return k == key_mass_.end() || total_ <= 0.0 ? 0.0 : k->second / total_;
}

std::vector<std::string> HistoryDistribution::x_keys() const {
  std::vector<std::string> keys;
  for (const auto& [k, m] : key_mass_) keys.push_back(k);
  return keys;
}

HistoryDistribution HistoryDistribution::marginalize_prefix(std::size_t T_prime) const {
  if (T_prime > T_ || T_prime == 0) throw std::invalid_argument("prefix length out of range");
  HistoryDistribution out(T_prime, num_alternatives_);
  for (const auto& [key, m] : mass_) {
    out.add(std::vector<int>(key.y.begin(), key.y.begin() + T_prime), key.x_key, m);
  }
  return out;
}

std::vector<std::pair<HistoryKey, double>> HistoryDistribution::entries() const {
  std::vector<std::pair<HistoryKey, double>> out;
  out.reserve(mass_.size());
  for (const auto& [key, m] : mass_) {
    out.emplace_back(key, m / key_mass_.at(key.x_key));
  }
  return out;
}

nlohmann::json HistoryDistribution::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, f] : this->entries()) {
    entries.push_back({{"y", key.y}, {"x_key", key.x_key}, {"freq", f}});
  }
  return {{"T", T_}, {"entries", entries}, {"count", total_}};
}

HistoryDistribution HistoryDistribution::from_json(const nlohmann::json& j) {
  const auto T = j.at("T").get<std::size_t>();
  int J1 = 2;
  for (const auto& e : j.at("entries")) {
    for (int v : e.at("y").get<std::vector<int>>()) J1 = std::max(J1, v + 1);
  }
  HistoryDistribution out(T, J1);
  // Frequencies are per key; restore masses assuming the total splits
  // uniformly over keys when per-key counts are not recorded.
  for (const auto& e : j.at("entries")) {
    out.add(e.at("y").get<std::vector<int>>(), e.value("x_key", std::string()), e.at("freq").get<double>());
  }
  return out;
}

HistoryDistribution history_frequencies(const Panel& panel, std::size_t T, bool condition_on_x) {
  if (panel.empty()) throw SchemaError("empty panel");
  HistoryDistribution dist(T, panel.num_alternatives());
  const auto K = static_cast<std::size_t>(panel.num_covariates());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& ind = panel[i];
    if (ind.length() < T) {
      throw SchemaError("individual '" + ind.id + "' is shorter than the window length " +
                        std::to_string(T) + "; split into sub-histories first");
    }
    std::string key;
    if (condition_on_x && K > 0) {
      key = covariate_key(std::span<const double>(ind.x).first(T * K));
    }
    dist.add(std::vector<int>(ind.y.begin(), ind.y.begin() + T), key);
  }
  return dist;
}

TransitionSummary empirical_transition_matrix(const Panel& panel) {
  const int J1 = panel.num_alternatives();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(J1, J1);
  Eigen::VectorXd marg = Eigen::VectorXd::Zero(J1);
  for (const auto& ind : panel.individuals()) {
    for (std::size_t t = 0; t < ind.length(); ++t) {
      marg(ind.y[t]) += 1.0;
      if (t > 0) counts(ind.y[t - 1], ind.y[t]) += 1.0;
    }
  }
  TransitionSummary out;
  out.matrix = Eigen::MatrixXd::Constant(J1, J1, std::numeric_limits<double>::quiet_NaN());
  out.row_defined.assign(J1, false);
  for (int k = 0; k < J1; ++k) {
    const double row = counts.row(k).sum();
    if (row > 0.0) {
      out.matrix.row(k) = counts.row(k) / row;
      out.row_defined[k] = true;
    }
  }
  const double total = marg.sum();
  out.shares = total > 0.0 ? Eigen::VectorXd(marg / total) : Eigen::VectorXd::Zero(J1);
  out.persistence.resize(J1);
  for (int j = 0; j < J1; ++j) {
    out.persistence(j) = out.matrix(j, j) - out.shares(j);
  }
  return out;
}

}  // namespace feame
