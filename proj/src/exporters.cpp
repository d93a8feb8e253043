#include "hisd/exporters.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace hisd {

namespace {

using nlohmann::ordered_json;

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const ordered_json& arr) {
  Eigen::VectorXd v(arr.size());
  Eigen::Index i = 0;
  for (const auto& c : arr) v[i++] = c.get<double>();
  return v;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  ordered_json data = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
  Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index idx = 0;
  const auto& data = j.at("data");
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(idx++).get<double>();
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ordered_json saddles_to_json(const LandscapeGraph& graph) {
  ordered_json root;
  root["schema_version"] = 1;
  ordered_json list = ordered_json::array();
  for (const SaddleRecord& s : graph.saddles) {
    ordered_json item;
    item["id"] = s.id;
    item["position"] = vector_to_json(s.position);
    item["morse_index"] = s.morse_index;
    ordered_json parents = ordered_json::array();
    for (int p : s.parents)
      if (p != -1) parents.push_back(p);
    item["parents"] = std::move(parents);
    list.push_back(std::move(item));
  }
  root["saddles"] = std::move(list);
  return root;
}

void export_saddles_json(const LandscapeGraph& graph, const std::filesystem::path& path) {
  write_file(path, saddles_to_json(graph).dump(2) + "\n");
}

std::string graph_to_dot(const LandscapeGraph& graph) {
  std::string out = "digraph landscape {\n  rankdir=TB;\n  node [shape=ellipse];\n";
  // Rank groups from high to low Morse index so higher saddles render above.
  std::map<int, std::vector<int>, std::greater<int>> by_index;
  for (const SaddleRecord& s : graph.saddles) by_index[s.morse_index].push_back(s.id);
  for (const auto& [index, ids] : by_index) {
    out += "  { rank=same;";
    for (int id : ids) {
      out += " s" + std::to_string(id) + " [label=\"" + std::to_string(id) + " (index " +
             std::to_string(index) + ")\"];";
    }
    out += " }\n";
  }
  for (const SaddleRecord& s : graph.saddles)
    for (int p : s.parents)
      if (p != -1) out += "  s" + std::to_string(p) + " -> s" + std::to_string(s.id) + ";\n";
  out += "}\n";
  return out;
}

void export_dot(const LandscapeGraph& graph, const std::filesystem::path& path) {
  write_file(path, graph_to_dot(graph));
}

void export_trajectories_csv(const LandscapeGraph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "trajectories");
  for (const DetailRecord& record : graph.details) {
    std::filesystem::path file =
        dir / "trajectories" /
        (std::to_string(record.child) + "_" + std::to_string(record.parent) + ".csv");
    const Eigen::Index d = graph.initial_point.size();
    std::string out = "t";
    for (Eigen::Index i = 1; i <= d; ++i) out += ",x" + std::to_string(i);
    out += "\n";
    if (record.trajectory && !record.trajectory->points.empty()) {
      const Trajectory& t = *record.trajectory;
      for (std::size_t r = 0; r < t.points.size(); ++r) {
        out += csv_number(t.times[r]);
        for (Eigen::Index i = 0; i < t.points[r].size(); ++i)
          out += "," + csv_number(t.points[r][i]);
        out += "\n";
      }
    } else {
      // Straight-line fallback: parent position then child position.
      Eigen::VectorXd from = record.parent >= 0
                                 ? graph.saddles[static_cast<std::size_t>(record.parent)].position
                                 : graph.initial_point;
      Eigen::VectorXd to = graph.saddles[static_cast<std::size_t>(record.child)].position;
      out += "0";
      for (Eigen::Index i = 0; i < from.size(); ++i) out += "," + csv_number(from[i]);
      out += "\n1";
      for (Eigen::Index i = 0; i < to.size(); ++i) out += "," + csv_number(to[i]);
      out += "\n";
    }
    write_file(file, out);
  }
}

void export_gnorm_csv(const LandscapeGraph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < graph.details.size(); ++i) {
    std::string out = "iter,gnorm\n";
    const std::vector<double>& h = graph.details[i].gnorm_history;
    for (std::size_t r = 0; r < h.size(); ++r)
      out += std::to_string(r) + "," + csv_number(h[r]) + "\n";
    write_file(dir / ("gnorm_" + std::to_string(i) + ".csv"), out);
  }
}

void export_grid_csv(const SystemSpec& spec, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, int grid_n,
                     const std::filesystem::path& path) {
  if (!spec.energy)
    throw std::runtime_error(
        "grid export needs an energy evaluator; force-only systems cannot be sampled");
  if (grid_n < 2) throw std::invalid_argument("grid_n must be at least 2");
  const expr::CompiledScalarFn& energy = *spec.energy;
  std::string out;
  if (spec.dim == 1) {
    out = "x,E\n";
    for (int i = 0; i < grid_n; ++i) {
      Eigen::VectorXd x(1);
      x[0] = lo[0] + (hi[0] - lo[0]) * i / (grid_n - 1);
      out += csv_number(x[0]) + "," + csv_number(energy(x)) + "\n";
    }
  } else if (spec.dim == 2) {
    out = "x,y,E\n";
    for (int i = 0; i < grid_n; ++i) {
      for (int j = 0; j < grid_n; ++j) {
        Eigen::VectorXd x(2);
        x[0] = lo[0] + (hi[0] - lo[0]) * i / (grid_n - 1);
        x[1] = lo[1] + (hi[1] - lo[1]) * j / (grid_n - 1);
        out += csv_number(x[0]) + "," + csv_number(x[1]) + "," + csv_number(energy(x)) + "\n";
      }
    }
  } else {
    throw std::runtime_error("grid export is limited to 1D and 2D systems");
  }
  write_file(path, out);
}

ordered_json state_to_json(const LandscapeGraph& graph, const ordered_json& manifest) {
  ordered_json root;
  root["schema_version"] = 1;
  root["kind"] = "hisd-state";
  root["manifest"] = manifest;
  root["initial_point"] = vector_to_json(graph.initial_point);
  root["bound_min"] = vector_to_json(graph.bound_min);
  root["bound_max"] = vector_to_json(graph.bound_max);
  ordered_json saddles = ordered_json::array();
  for (const SaddleRecord& s : graph.saddles) {
    ordered_json item;
    item["id"] = s.id;
    item["position"] = vector_to_json(s.position);
    item["morse_index"] = s.morse_index;
    item["parents"] = s.parents;
    item["unstable_basis"] = matrix_to_json(s.unstable_basis);
    saddles.push_back(std::move(item));
  }
  root["saddles"] = std::move(saddles);
  ordered_json details = ordered_json::array();
  for (const DetailRecord& d : graph.details) {
    ordered_json item;
    item["child"] = d.child;
    item["parent"] = d.parent;
    item["gnorm_history"] = d.gnorm_history;
    if (d.trajectory) {
      ordered_json t;
      t["times"] = d.trajectory->times;
      ordered_json points = ordered_json::array();
      for (const Eigen::VectorXd& p : d.trajectory->points) points.push_back(vector_to_json(p));
      t["points"] = std::move(points);
      item["trajectory"] = std::move(t);
    } else {
      item["trajectory"] = nullptr;
    }
    details.push_back(std::move(item));
  }
  root["details"] = std::move(details);
  return root;
}

void save_state(const LandscapeGraph& graph, const ordered_json& manifest,
                const std::filesystem::path& path) {
  write_file(path, state_to_json(graph, manifest).dump(2) + "\n");
}

LoadedState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file " + path.string());
  ordered_json root = ordered_json::parse(in);
  if (!root.contains("kind") || root.at("kind") != "hisd-state")
    throw std::runtime_error("not a hisd state file: " + path.string());

  LoadedState state;
  state.manifest = root.at("manifest");
  state.graph.initial_point = vector_from_json(root.at("initial_point"));
  state.graph.bound_min = vector_from_json(root.at("bound_min"));
  state.graph.bound_max = vector_from_json(root.at("bound_max"));
  for (const auto& item : root.at("saddles")) {
    SaddleRecord s;
    s.id = item.at("id").get<int>();
    s.position = vector_from_json(item.at("position"));
    s.morse_index = item.at("morse_index").get<int>();
    s.parents = item.at("parents").get<std::vector<int>>();
    s.unstable_basis = matrix_from_json(item.at("unstable_basis"));
    state.graph.saddles.push_back(std::move(s));
  }
  for (const auto& item : root.at("details")) {
    DetailRecord d;
    d.child = item.at("child").get<int>();
    d.parent = item.at("parent").get<int>();
    d.gnorm_history = item.at("gnorm_history").get<std::vector<double>>();
    if (!item.at("trajectory").is_null()) {
      Trajectory t;
      t.times = item.at("trajectory").at("times").get<std::vector<double>>();
      for (const auto& p : item.at("trajectory").at("points"))
        t.points.push_back(vector_from_json(p));
      d.trajectory = std::move(t);
    }
    state.graph.details.push_back(std::move(d));
  }
  return state;
}

}  // namespace hisd
