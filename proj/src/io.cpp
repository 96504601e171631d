#include "socem/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace socem {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw Error(name + ": expected a nonempty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError(name + ": rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw Error(name + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json policy_to_json(const PolicyParams& p) {
  p.validate();
  json steps = json::array();
  for (const auto& s : p.steps) {
    steps.push_back({{"F", matrix_to_json(s.F)},
                     {"e", vector_to_json(s.e)},
                     {"Sigma_sqrt", matrix_to_json(s.sigma_sqrt)}});
  }
  return {{"T", p.horizon()}, {"n_s", p.state_dim()}, {"n_a", p.action_dim()}, {"steps", steps}};
}

PolicyParams policy_from_json(const json& j) {
  try {
    PolicyParams p;
    for (const auto& s : j.at("steps")) {
      p.steps.push_back({matrix_from_json(s.at("F"), "F"), vector_from_json(s.at("e"), "e"),
                         matrix_from_json(s.at("Sigma_sqrt"), "Sigma_sqrt")});
    }
    p.validate();
    if (j.at("T").get<int>() != p.horizon() || j.at("n_s").get<Eigen::Index>() != p.state_dim() ||
        j.at("n_a").get<Eigen::Index>() != p.action_dim()) {
      throw DimensionError("header (T, n_s, n_a) disagrees with the steps");
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("policy JSON: ") + e.what());
  } catch (const Error& e) {
    throw Error(std::string("policy JSON: ") + e.what());
  }
}

json model_to_json(const LtvModel& m) {
  json steps = json::array();
  for (const auto& s : m.steps) {
    steps.push_back({{"A_d", matrix_to_json(s.A_d)},
                     {"B_d", matrix_to_json(s.B_d)},
                     {"c_d", vector_to_json(s.c_d)},
                     {"A_r", matrix_to_json(s.A_r)},
                     {"B_r", matrix_to_json(s.B_r)},
                     {"c_r", s.c_r},
                     {"Sigma_d", matrix_to_json(s.Sigma_d)},
                     {"Sigma_r", s.Sigma_r}});
  }
  return {{"T", m.horizon()},
          {"n_s", m.state_dim()},
          {"n_a", m.action_dim()},
          {"mu1", vector_to_json(m.mu1)},
          {"P1", matrix_to_json(m.P1)},
          {"steps", steps}};
}

LtvModel model_from_json(const json& j) {
  try {
    LtvModel m;
    m.mu1 = vector_from_json(j.at("mu1"), "mu1");
    m.P1 = matrix_from_json(j.at("P1"), "P1");
    for (const auto& s : j.at("steps")) {
      LtvStep st;
      st.A_d = matrix_from_json(s.at("A_d"), "A_d");
      st.B_d = matrix_from_json(s.at("B_d"), "B_d");
      st.c_d = vector_from_json(s.at("c_d"), "c_d");
      st.A_r = matrix_from_json(s.at("A_r"), "A_r");
      st.B_r = matrix_from_json(s.at("B_r"), "B_r");
      st.c_r = s.at("c_r").get<double>();
      st.Sigma_d = matrix_from_json(s.at("Sigma_d"), "Sigma_d");
      st.Sigma_r = s.at("Sigma_r").get<double>();
      m.steps.push_back(std::move(st));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("model JSON: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path);
}

PolicyParams load_policy(const std::string& path) { return policy_from_json(read_json_file(path)); }

void save_policy(const PolicyParams& p, const std::string& path) {
  write_json_file(policy_to_json(p), path);
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw Error(where + ": cannot parse '" + s + "'");
  return v;
}

}  // namespace

void write_episode_csv(const EpisodeData& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "k,m";
  for (Eigen::Index i = 1; i <= data.n_s; ++i) out << ",s" << i;
  for (Eigen::Index i = 1; i <= data.n_a; ++i) out << ",a" << i;
  for (Eigen::Index i = 1; i <= data.n_s; ++i) out << ",s_next" << i;
  out << ",y\n";
  for (int k = 0; k < data.horizon(); ++k) {
    for (std::size_t m = 0; m < data.steps[static_cast<std::size_t>(k)].size(); ++m) {
      const VectorXd x = data.stacked(k, m);
      out << k + 1 << ',' << m + 1;
      for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << format_double(x(i));
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path);
}

EpisodeData read_episode_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  const auto header = split(line);
  EpisodeData d;
  for (const auto& h : header) {
    if (h.rfind("s_next", 0) == 0) continue;
    if (h.size() > 1 && h[0] == 's') ++d.n_s;
    if (h.size() > 1 && h[0] == 'a') ++d.n_a;
  }
  const auto width = static_cast<std::size_t>(2 + d.joint_dim());
  if (header.size() != width || header.front() != "k" || header[1] != "m" || header.back() != "y") {
    throw Error(path + ": header must read k,m,s1..,a1..,s_next1..,y");
  }
  std::map<int, std::map<int, Transition>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != width) throw Error(where + ": expected " + std::to_string(width) + " fields");
    const int k = static_cast<int>(parse_double(cells[0], where));
    const int m = static_cast<int>(parse_double(cells[1], where));
    VectorXd x(d.joint_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x(i) = parse_double(cells[static_cast<std::size_t>(i + 2)], where);
    }
    Transition t{x.head(d.n_s), x.segment(d.n_s, d.n_a), x.segment(d.n_s + d.n_a, d.n_s),
                 x(x.size() - 1)};
    if (!rows[k].emplace(m, std::move(t)).second) {
      throw Error(where + ": duplicate record for k=" + std::to_string(k) + ", m=" + std::to_string(m));
    }
  }
  int expected = 1;
  for (auto& [k, recs] : rows) {
    if (k != expected++) throw Error(path + ": timesteps must run contiguously from 1");
    std::vector<Transition> v;
    for (auto& [m, t] : recs) v.push_back(std::move(t));
    d.steps.push_back(std::move(v));
  }
  d.validate();
  return d;
}

}  // namespace socem
