#include "optiwing/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "optiwing/rng.hpp"

namespace optiwing::data {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json condition_to_json(const flow::FlowCondition& c) {
  return json{{"mach", c.mach},
              {"reynolds", c.reynolds},
              {"cl_con", c.cl_con},
              {"vmin_frac", c.vmin_frac}};
}

flow::FlowCondition condition_from_json(const json& j) {
  flow::FlowCondition c;
  c.mach = j.at("mach").get<double>();
  c.reynolds = j.at("reynolds").get<double>();
  c.cl_con = j.at("cl_con").get<double>();
  c.vmin_frac = j.at("vmin_frac").get<double>();
  return c;
}

CaseDescriptor descriptor_from_json(const json& j, Dimensionality dim) {
  CaseDescriptor d;
  d.case_id = j.at("case_id").get<std::string>();
  d.dim = dim;
  d.condition = condition_from_json(j.at("condition"));
  d.alpha_opt = j.at("alpha_opt").get<double>();
  d.initial_airfoil = j.value("initial_airfoil", "");
  d.initial_sim_failed = j.value("initial_sim_failed", false);
  const json& co = j.at("coefficients");
  d.coeff_initial.cl = co.at("initial").at("cl").get<double>();
  d.coeff_initial.cd = co.at("initial").at("cd").get<double>();
  d.coeff_optimized.cl = co.at("optimized").at("cl").get<double>();
  d.coeff_optimized.cd = co.at("optimized").at("cd").get<double>();
  d.initial_file = j.at("files").at("initial").get<std::string>();
  d.optimized_file = j.at("files").at("optimized").get<std::string>();
  return d;
}

json descriptor_to_json(const CaseDescriptor& d) {
  return json{
      {"case_id", d.case_id},
      {"condition", condition_to_json(d.condition)},
      {"alpha_opt", d.alpha_opt},
      {"initial_airfoil", d.initial_airfoil},
      {"initial_sim_failed", d.initial_sim_failed},
      {"coefficients",
       {{"initial", {{"cl", d.coeff_initial.cl}, {"cd", d.coeff_initial.cd}}},
        {"optimized",
         {{"cl", d.coeff_optimized.cl}, {"cd", d.coeff_optimized.cd}}}}},
      {"files", {{"initial", d.initial_file}, {"optimized", d.optimized_file}}}};
}

// Validates one case down to its geometry files. Returns an error string,
// empty on success.
std::string validate_case(const DatasetIndex& index, CaseDescriptor& d) {
  for (const std::string& rel : {d.initial_file, d.optimized_file}) {
    const auto path = index.root / rel;
    if (!std::filesystem::exists(path)) {
      return "missing geometry file " + rel;
    }
  }
  geom::WingGeometry initial, optimized;
  try {
    initial = read_slices(index.root / d.initial_file);
    optimized = read_slices(index.root / d.optimized_file);
  } catch (const std::exception& e) {
    return std::string("unreadable geometry: ") + e.what();
  }
  initial.half_span = index.half_span;
  optimized.half_span = index.half_span;
  for (const auto* w : {&initial, &optimized}) {
    const std::vector<std::string> problems = geom::validate(*w);
    if (!problems.empty()) return problems.front();
  }
  if (initial.slices.size() != optimized.slices.size()) {
    return "initial/optimized slice count mismatch";
  }
  for (std::size_t k = 0; k < initial.span_stations.size(); ++k) {
    if (initial.span_stations[k] != optimized.span_stations[k]) {
      return "initial/optimized span stations differ";
    }
  }
  if (!(d.coeff_initial.cd > 0.0) || !(d.coeff_optimized.cd > 0.0)) {
    return "non-positive drag coefficient";
  }
  d.condition_in_bounds = flow::within_bounds(d.condition);
  d.alpha_in_bounds = d.alpha_opt >= 0.0 && d.alpha_opt <= 10.0;
  return {};
}

}  // namespace

std::string to_string(Dimensionality d) {
  return d == Dimensionality::two_d ? "2D" : "3D";
}

Dimensionality dimensionality_from_string(const std::string& s) {
  if (s == "2D") return Dimensionality::two_d;
  if (s == "3D") return Dimensionality::three_d;
  throw std::runtime_error("unknown dimensionality: " + s);
}

const CaseDescriptor* DatasetIndex::find(const std::string& case_id) const {
  for (const CaseDescriptor& d : cases) {
    if (d.case_id == case_id) return &d;
  }
  return nullptr;
}

DatasetIndex load_manifest(const std::filesystem::path& root) {
  if (!std::filesystem::exists(root)) {
    throw std::runtime_error("dataset root does not exist: " + root.string());
  }
  DatasetIndex index;
  index.root = root;

  const auto manifest_path = root / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    // An empty directory is a valid, empty dataset.
    if (std::filesystem::is_empty(root)) return index;
    throw std::runtime_error("no manifest.json under " + root.string());
  }

  std::ifstream in(manifest_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("unreadable manifest: ") + e.what());
  }
  index.schema_version = j.at("schema_version").get<int>();
  if (index.schema_version != kSchemaVersion) {
    throw std::runtime_error("unsupported schema_version " +
                             std::to_string(index.schema_version));
  }
  index.dim = dimensionality_from_string(j.value("dimensionality", "3D"));
  index.half_span = j.value("half_span", 2.5);

  std::vector<std::string> seen;
  for (const json& cj : j.at("cases")) {
    CaseDescriptor d;
    try {
      d = descriptor_from_json(cj, index.dim);
    } catch (const std::exception& e) {
      index.skipped.push_back({cj.value("case_id", "<unknown>"),
                               std::string("bad descriptor: ") + e.what()});
      continue;
    }
    if (std::find(seen.begin(), seen.end(), d.case_id) != seen.end()) {
      index.skipped.push_back({d.case_id, "duplicate case_id"});
      continue;
    }
    const std::string err = validate_case(index, d);
    if (!err.empty()) {
      index.skipped.push_back({d.case_id, err});
      continue;
    }
    seen.push_back(d.case_id);
    index.cases.push_back(std::move(d));
  }
  return index;
}

WingCase load_case(const DatasetIndex& index, const std::string& case_id) {
  const CaseDescriptor* d = index.find(case_id);
  if (!d) throw std::runtime_error("unknown case: " + case_id);
  WingCase c;
  c.desc = *d;
  c.initial = read_slices(index.root / d->initial_file);
  c.optimized = read_slices(index.root / d->optimized_file);
  c.initial.half_span = index.half_span;
  c.optimized.half_span = index.half_span;
  return c;
}

SplitAssignment split_dataset(const DatasetIndex& index, std::uint64_t seed,
                              const SplitCounts& counts) {
  const std::size_t total = counts.train + counts.val + counts.test;
  if (total > index.cases.size()) {
    throw std::invalid_argument("split_dataset: counts exceed available cases");
  }
  std::vector<std::string> ids;
  ids.reserve(index.cases.size());
  for (const CaseDescriptor& d : index.cases) ids.push_back(d.case_id);
  std::sort(ids.begin(), ids.end());

  Rng rng(seed, Rng::hash_key("split"));
  rng.shuffle(ids);

  SplitAssignment split;
  split.seed = seed;
  auto it = ids.begin();
  split.train_ids.assign(it, it + static_cast<long>(counts.train));
  it += static_cast<long>(counts.train);
  split.val_ids.assign(it, it + static_cast<long>(counts.val));
  it += static_cast<long>(counts.val);
  split.test_ids.assign(it, it + static_cast<long>(counts.test));
  return split;
}

PairingResult pair_2d_3d(const DatasetIndex& index2d, const DatasetIndex& index3d) {
  PairingResult out;
  auto same_condition = [](const flow::FlowCondition& a, const flow::FlowCondition& b) {
    return a.mach == b.mach && a.reynolds == b.reynolds &&
           a.cl_con == b.cl_con && a.vmin_frac == b.vmin_frac;
  };
  std::vector<bool> used3d(index3d.cases.size(), false);
  for (const CaseDescriptor& c2 : index2d.cases) {
    bool matched = false;
    for (std::size_t i = 0; i < index3d.cases.size(); ++i) {
      const CaseDescriptor& c3 = index3d.cases[i];
      if (used3d[i] || c3.initial_airfoil != c2.initial_airfoil ||
          !same_condition(c3.condition, c2.condition)) {
        continue;
      }
      out.pairs.emplace_back(c2.case_id, c3.case_id);
      used3d[i] = true;
      matched = true;
      break;
    }
    if (!matched) out.unmatched_2d.push_back(c2.case_id);
  }
  for (std::size_t i = 0; i < index3d.cases.size(); ++i) {
    if (!used3d[i]) out.unmatched_3d.push_back(index3d.cases[i].case_id);
  }
  return out;
}

void write_slices(const std::filesystem::path& path, const geom::WingGeometry& w) {
  if (w.slices.size() != w.span_stations.size()) {
    throw std::invalid_argument("write_slices: slice/station count mismatch");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# optiwing-slices v1\n";
  out << "x,y,z,cp\n";
  const bool has_cp = w.has_pressure();
  for (std::size_t k = 0; k < w.slices.size(); ++k) {
    const double z = w.span_stations[k];
    const geom::Section& s = w.slices[k];
    for (std::size_t p = 0; p < s.coords.size(); ++p) {
      out << fmt_double(s.coords[p].x) << ',' << fmt_double(s.coords[p].y)
          << ',' << fmt_double(z) << ',';
      if (has_cp) out << fmt_double(w.cp[k][p]);
      out << '\n';
    }
  }
}

geom::WingGeometry read_slices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# optiwing-slices", 0) != 0) {
    throw std::runtime_error("bad slice header in " + path.string());
  }
  std::getline(in, line);  // column header

  geom::WingGeometry w;
  geom::Section current;
  std::vector<double> current_cp;
  bool have_z = false;
  double z = 0.0;
  bool any_cp = false;

  auto flush = [&]() {
    if (current.coords.empty()) return;
    w.slices.push_back(std::move(current));
    w.span_stations.push_back(z);
    w.cp.push_back(std::move(current_cp));
    current = {};
    current_cp = {};
  };

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::array<std::string, 4> fields;
    std::size_t field = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= fields.size()) {
          throw std::runtime_error("too many columns at line " + std::to_string(line_no));
        }
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field < 3) {
      throw std::runtime_error("too few columns at line " + std::to_string(line_no));
    }
    auto parse = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error("bad number '" + s + "' at line " + std::to_string(line_no));
      }
      return v;
    };
    const double x = parse(fields[0]);
    const double y = parse(fields[1]);
    const double zz = parse(fields[2]);
    if (!have_z || zz != z) {
      flush();
      z = zz;
      have_z = true;
    }
    current.coords.push_back({x, y});
    if (!fields[3].empty()) {
      current_cp.push_back(parse(fields[3]));
      any_cp = true;
    }
  }
  flush();

  if (!any_cp) {
    w.cp.clear();
  } else {
    for (std::size_t k = 0; k < w.cp.size(); ++k) {
      if (w.cp[k].size() != w.slices[k].coords.size()) {
        throw std::runtime_error("partial cp column in " + path.string());
      }
    }
  }
  return w;
}

void write_manifest(const std::filesystem::path& root, Dimensionality dim,
                    double half_span, const std::vector<CaseDescriptor>& cases) {
  std::filesystem::create_directories(root);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["dimensionality"] = to_string(dim);
  j["half_span"] = half_span;
  j["cases"] = json::array();
  for (const CaseDescriptor& d : cases) j["cases"].push_back(descriptor_to_json(d));
  std::ofstream out(root / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest under " + root.string());
  out << j.dump(1) << '\n';
}

void write_latents(const std::filesystem::path& path,
                   const std::vector<std::array<double, 90>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# optiwing-latents v1\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << fmt_double(row[i]);
    }
    out << '\n';
  }
}

std::vector<std::array<double, 90>> read_latents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# optiwing-latents", 0) != 0) {
    throw std::runtime_error("bad latent header in " + path.string());
  }
  std::vector<std::array<double, 90>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 90> row{};
    std::stringstream ss(line);
    std::string tok;
    std::size_t i = 0;
    while (std::getline(ss, tok, ',')) {
      if (i >= row.size()) throw std::runtime_error("latent row too long");
      row[i++] = std::strtod(tok.c_str(), nullptr);
    }
    if (i != row.size()) throw std::runtime_error("latent row too short");
    rows.push_back(row);
  }
  return rows;
}

std::filesystem::path resolve_data_root(const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (const char* env = std::getenv(kDataRootEnv)) return env;
  throw std::runtime_error(
      "no data root: pass --data-root or set OPTIWING_DATA_ROOT");
}

}  // namespace optiwing::data
