#include "codesign/problem_file.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "codesign/error.hpp"

namespace codesign {

namespace fs = std::filesystem;

namespace {

std::string where(const toml::node& n, const std::string& path) {
  const auto& src = n.source();
  if (src.begin.line == 0) return path;
  return path + " (line " + std::to_string(src.begin.line) + ")";
}

[[noreturn]] void schema(const toml::node& n, const std::string& path, const std::string& what) {
  throw SchemaError(where(n, path) + ": " + what);
}

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

// "name [unit]" -> {name, unit}
Feature parse_feature(std::string_view text) {
  auto open = text.find('[');
  if (open == std::string_view::npos) return {trim(text), ""};
  auto close = text.rfind(']');
  if (close == std::string_view::npos || close < open) {
    throw SchemaError("feature '" + std::string(text) + "' has an unterminated unit");
  }
  return {trim(text.substr(0, open)), trim(text.substr(open + 1, close - open - 1))};
}

double parse_number(const std::string& cell, const std::string& loc) {
  std::string t = trim(cell);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw SchemaError(loc + ": '" + t + "' is not a number");
  if (!std::isfinite(v)) throw SchemaError(loc + ": value is not finite");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
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
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

FeatureMatrix load_csv_module(const std::string& id, const fs::path& file, bool optional) {
  std::ifstream in(file);
  if (!in) throw SchemaError("module." + id + ": cannot read CSV '" + file.string() + "'");
  std::string line;
  std::vector<Feature> features;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    std::string loc = file.string() + ":" + std::to_string(lineno);
    if (features.empty() && names.empty() && columns.empty()) {
      if (cells.size() < 2) throw SchemaError(loc + ": header needs a name column and features");
      for (std::size_t k = 1; k < cells.size(); ++k) features.push_back(parse_feature(cells[k]));
      continue;
    }
    if (cells.size() != features.size() + 1) {
      throw SchemaError(loc + ": expected " + std::to_string(features.size() + 1) + " cells, found " +
                        std::to_string(cells.size()));
    }
    names.push_back(trim(cells[0]));
    std::vector<double> col;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      col.push_back(parse_number(cells[k], loc + ", column " + std::to_string(k + 1)));
    }
    columns.push_back(std::move(col));
  }
  try {
    return FeatureMatrix(id, std::move(features), std::move(names), columns, optional);
  } catch (const SchemaError& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
}

FeatureMatrix load_module(const std::string& id, const toml::node& node, const fs::path& base) {
  std::string path = "module." + id;
  const auto* tbl = node.as_table();
  if (tbl == nullptr) schema(node, path, "expected a table");
  for (auto&& [k, v] : *tbl) {
    std::string key(k.str());
    if (key != "features" && key != "components" && key != "csv" && key != "optional") {
      schema(v, path + "." + key, "unknown key");
    }
  }
  bool optional = false;
  if (const auto* o = tbl->get("optional")) {
    auto b = o->value<bool>();
    if (!b) schema(*o, path + ".optional", "expected a boolean");
    optional = *b;
  }
  if (const auto* csv = tbl->get("csv")) {
    auto file = csv->value<std::string>();
    if (!file) schema(*csv, path + ".csv", "expected a file name");
    if (tbl->get("components") != nullptr || tbl->get("features") != nullptr) {
      schema(*csv, path, "use either csv or features/components");
    }
    return load_csv_module(id, base / *file, optional);
  }
  const auto* feats = tbl->get_as<toml::array>("features");
  const auto* comps = tbl->get_as<toml::array>("components");
  if (feats == nullptr) schema(node, path, "missing 'features' array");
  if (comps == nullptr) schema(node, path, "missing 'components' array");
  std::vector<Feature> features;
  for (std::size_t k = 0; k < feats->size(); ++k) {
    auto s = (*feats)[k].value<std::string>();
    if (!s) schema((*feats)[k], path + ".features[" + std::to_string(k) + "]", "expected a string");
    try {
      features.push_back(parse_feature(*s));
    } catch (const SchemaError& e) {
      schema((*feats)[k], path + ".features[" + std::to_string(k) + "]", e.what());
    }
  }
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (std::size_t j = 0; j < comps->size(); ++j) {
    std::string cpath = path + ".components[" + std::to_string(j) + "]";
    const auto* row = (*comps)[j].as_array();
    if (row == nullptr || row->empty()) schema((*comps)[j], cpath, "expected [name, values...]");
    auto name = (*row)[0].value<std::string>();
    if (!name) schema((*row)[0], cpath + "[0]", "component name must be a string");
    if (row->size() != features.size() + 1) {
      schema((*comps)[j], cpath,
             "expected " + std::to_string(features.size()) + " values, found " +
                 std::to_string(row->size() - 1));
    }
    std::vector<double> col;
    for (std::size_t k = 1; k < row->size(); ++k) {
      const auto& cell = (*row)[k];
      std::string vpath = cpath + "[" + std::to_string(k) + "] (" + features[k - 1].name + ")";
      if (!cell.is_number()) schema(cell, vpath, "expected a number");
      double v = *cell.value<double>();
      if (!std::isfinite(v)) schema(cell, vpath, "value is not finite");
      col.push_back(v);
    }
    names.push_back(*name);
    columns.push_back(std::move(col));
  }
  try {
    return FeatureMatrix(id, std::move(features), std::move(names), columns, optional);
  } catch (const SchemaError& e) {
    schema(node, path, e.what());
  }
}

std::vector<std::string> string_list(const toml::node& node, const std::string& path) {
  const auto* arr = node.as_array();
  if (arr == nullptr) schema(node, path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < arr->size(); ++k) {
    auto s = (*arr)[k].value<std::string>();
    if (!s) schema((*arr)[k], path + "[" + std::to_string(k) + "]", "expected a string");
    out.push_back(*s);
  }
  return out;
}

std::vector<FeatureMatrix> load_modules(const toml::table& root, const fs::path& base) {
  const auto* mods = root.get_as<toml::table>("module");
  if (mods == nullptr) throw SchemaError("problem file has no [module.<id>] tables");
  std::vector<FeatureMatrix> out;
  std::vector<std::string> order;
  if (const auto* prob = root.get_as<toml::table>("problem")) {
    if (const auto* o = prob->get("modules")) order = string_list(*o, "problem.modules");
  }
  if (order.empty()) {
    for (auto&& [k, v] : *mods) order.emplace_back(k.str());
  } else {
    std::set<std::string> listed(order.begin(), order.end());
    for (auto&& [k, v] : *mods) {
      if (!listed.count(std::string(k.str()))) {
        schema(v, "module." + std::string(k.str()), "missing from problem.modules");
      }
    }
  }
  for (const auto& id : order) {
    const auto* node = mods->get(id);
    if (node == nullptr) throw SchemaError("problem.modules: unknown module '" + id + "'");
    out.push_back(load_module(id, *node, base));
  }
  return out;
}

toml::table parse_toml(std::string_view text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    throw ParseError(msg.str());
  }
}

void check_keys(const toml::table& root) {
  static const std::set<std::string> known = {"problem", "params", "module", "maximize",
                                              "subject_to", "implicit", "restrict", "compat",
                                              "cost"};
  for (auto&& [k, v] : root) {
    if (!known.count(std::string(k.str()))) schema(v, std::string(k.str()), "unknown key");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

bool bare_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

}  // namespace

std::pair<std::string, double> parse_param_override(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError("--param expects key=value, got '" + std::string(text) + "'");
  }
  std::string key = trim(text.substr(0, eq));
  std::string val = trim(text.substr(eq + 1));
  try {
    return {key, parse_number(val, "--param " + key)};
  } catch (const SchemaError& e) {
    throw ParseError(e.what());
  }
}

DesignSpace load_design_space(std::string_view text, const fs::path& base_dir) {
  toml::table root = parse_toml(text, "<design space>");
  return DesignSpace(load_modules(root, base_dir));
}

std::string serialize_design_space(const DesignSpace& space) {
  std::ostringstream out;
  out << "[problem]\nmodules = [";
  for (std::size_t i = 0; i < space.num_modules(); ++i) {
    out << (i ? ", " : "") << quote(space.module(i).module_id());
  }
  out << "]\n";
  for (const auto& m : space.modules()) {
    const std::string& id = m.module_id();
    out << "\n[module." << (bare_key(id) ? id : quote(id)) << "]\n";
    if (m.optional()) out << "optional = true\n";
    out << "features = [";
    for (std::size_t k = 0; k < m.num_features(); ++k) {
      const auto& f = m.features()[k];
      out << (k ? ", " : "") << quote(f.unit.empty() ? f.name : f.name + " [" + f.unit + "]");
    }
    out << "]\ncomponents = [\n";
    for (std::size_t j = 0; j < m.num_components(); ++j) {
      out << "  [" << quote(m.component_names()[j]);
      for (double v : m.column(j)) out << ", " << format_double(v);
      out << "],\n";
    }
    out << "]\n";
  }
  return out.str();
}

Problem load_problem(const fs::path& path, const ParamOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read problem file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_problem_text(buf.str(), path.parent_path(), overrides, path.string());
}

Problem load_problem_text(std::string_view text, const fs::path& base_dir,
                          const ParamOverrides& overrides, const std::string& source_name) {
  toml::table root = parse_toml(text, source_name);
  check_keys(root);
  Problem prob;
  if (const auto* p = root.get("problem")) {
    const auto* t = p->as_table();
    if (t == nullptr) schema(*p, "problem", "expected a table");
    for (auto&& [k, v] : *t) {
      std::string key(k.str());
      if (key == "name") {
        prob.name = v.value<std::string>().value_or("");
      } else if (key == "template") {
        auto s = v.value<std::string>();
        if (!s || (*s != "custom" && *s != "drone" && *s != "transport")) {
          schema(v, "problem.template", "expected \"custom\", \"drone\" or \"transport\"");
        }
        prob.template_name = *s;
      } else if (key != "modules") {
        schema(v, "problem." + key, "unknown key");
      }
    }
  }
  if (const auto* p = root.get("params")) {
    const auto* t = p->as_table();
    if (t == nullptr) schema(*p, "params", "expected a table");
    for (auto&& [k, v] : *t) {
      if (!v.is_number()) schema(v, "params." + std::string(k.str()), "expected a number");
      prob.params[std::string(k.str())] = *v.value<double>();
    }
  }
  for (const auto& [key, value] : overrides) {
    bool known = prob.params.count(key) > 0;
    if (prob.template_name == "drone") {
      known = known || std::find(DroneParams::names().begin(), DroneParams::names().end(), key) !=
                           DroneParams::names().end();
    } else if (prob.template_name == "transport") {
      known = known || key == "weight" ||
              std::find(TransportParams::names().begin(), TransportParams::names().end(), key) !=
                  TransportParams::names().end();
    }
    if (!known) throw LookupError("--param: unknown parameter '" + key + "'");
    prob.params[key] = value;
  }

  std::vector<FeatureMatrix> modules = load_modules(root, base_dir);
  DesignSpec& spec = prob.spec;
  if (prob.template_name == "drone") {
    DroneParams dp;
    for (const auto& [k, v] : prob.params) dp.set(k, v);
    spec = build_drone_spec(DesignSpace(std::move(modules)), dp);
    prob.drone = dp;
  } else if (prob.template_name == "transport") {
    TransportParams tp;
    for (const auto& [k, v] : prob.params) tp.set(k, v);
    auto find = [&](const char* id) -> const FeatureMatrix& {
      for (const auto& m : modules) {
        if (m.module_id() == id) return m;
      }
      throw SchemaError(std::string("transport template needs [module.") + id + "]");
    };
    if (modules.size() != 4) {
      throw SchemaError("transport template takes exactly the frame, sensor, motor and battery catalogs");
    }
    spec = build_transport_spec(find("frame"), find("sensor"), find("motor"), find("battery"), tp);
    prob.transport = tp;
  } else {
    spec.space = DesignSpace(std::move(modules));
  }
  const DesignSpace& space = spec.space;

  auto parse_at = [&](const toml::node& n, const std::string& path, auto&& fn) {
    try {
      return fn();
    } catch (const ParseError& e) {
      throw ParseError(where(n, path) + ": " + e.what());
    } catch (const LookupError& e) {
      throw LookupError(where(n, path) + ": " + e.what());
    }
  };
  if (const auto* m = root.get("maximize")) {
    auto list = string_list(*m, "maximize");
    const auto& arr = *m->as_array();
    for (std::size_t k = 0; k < list.size(); ++k) {
      std::string path = "maximize[" + std::to_string(k) + "]";
      spec.objectives.push_back(parse_at(arr[k], path, [&] {
        return parse_objective(list[k], space, prob.params, "objective_" + std::to_string(k));
      }));
    }
  }
  for (const char* key : {"subject_to", "implicit"}) {
    const auto* node = root.get(key);
    if (node == nullptr) continue;
    auto list = string_list(*node, key);
    const auto& arr = *node->as_array();
    ConstraintClass klass = std::string(key) == "implicit" ? ConstraintClass::kImplicit : ConstraintClass::kSystem;
    for (std::size_t k = 0; k < list.size(); ++k) {
      std::string path = std::string(key) + "[" + std::to_string(k) + "]";
      std::string def = (klass == ConstraintClass::kSystem ? "sc" : "ic") + std::to_string(k + 1);
      spec.constraints.push_back(parse_at(arr[k], path, [&] {
        return parse_constraint(list[k], space, prob.params, klass, def);
      }));
    }
  }
  if (const auto* r = root.get("restrict")) {
    const auto* t = r->as_table();
    if (t == nullptr) schema(*r, "restrict", "expected a table of module = [components]");
    for (auto&& [k, v] : *t) {
      std::string id(k.str());
      std::string path = "restrict." + id;
      auto mi = space.module_index(id);
      if (!mi) schema(v, path, "unknown module '" + id + "'");
      Restriction res{"restrict_" + id, *mi, {}};
      for (const auto& c : string_list(v, path)) {
        auto ci = space.module(*mi).component_index(c);
        if (!ci) schema(v, path, "unknown component '" + c + "'");
        res.subset.push_back(*ci);
      }
      if (res.subset.empty()) schema(v, path, "restriction subset is empty");
      std::sort(res.subset.begin(), res.subset.end());
      spec.restrictions.push_back(std::move(res));
    }
  }
  if (const auto* c = root.get("compat")) {
    const auto* arr = c->as_array();
    if (arr == nullptr) schema(*c, "compat", "expected [[compat]] tables");
    for (std::size_t k = 0; k < arr->size(); ++k) {
      std::string path = "compat[" + std::to_string(k) + "]";
      const auto* t = (*arr)[k].as_table();
      if (t == nullptr) schema((*arr)[k], path, "expected a table");
      auto str = [&](const char* key) {
        auto s = t->get_as<std::string>(key);
        if (s == nullptr) schema((*arr)[k], path + "." + key, "expected a string");
        return s->get();
      };
      for (auto&& [key, v] : *t) {
        std::string ks(key.str());
        if (ks != "module" && ks != "component" && ks != "other" && ks != "subset" &&
            ks != "polarity" && ks != "label") {
          schema(v, path + "." + ks, "unknown key");
        }
      }
      CompatRule rule;
      rule.label = t->get("label") ? str("label") : "compat_" + std::to_string(k + 1);
      auto a = space.module_index(str("module"));
      auto b = space.module_index(str("other"));
      if (!a) schema((*arr)[k], path + ".module", "unknown module '" + str("module") + "'");
      if (!b) schema((*arr)[k], path + ".other", "unknown module '" + str("other") + "'");
      rule.module_a = *a;
      rule.module_b = *b;
      auto ca = space.module(*a).component_index(str("component"));
      if (!ca) schema((*arr)[k], path + ".component", "unknown component '" + str("component") + "'");
      rule.component = *ca;
      const auto* sub = t->get("subset");
      if (sub == nullptr) schema((*arr)[k], path + ".subset", "missing");
      for (const auto& name : string_list(*sub, path + ".subset")) {
        auto cb = space.module(*b).component_index(name);
        if (!cb) schema(*sub, path + ".subset", "unknown component '" + name + "'");
        rule.subset.push_back(*cb);
      }
      std::sort(rule.subset.begin(), rule.subset.end());
      rule.subset.erase(std::unique(rule.subset.begin(), rule.subset.end()), rule.subset.end());
      std::string pol = t->get("polarity") ? str("polarity") : "incompatible";
      if (pol == "compatible") {
        rule.polarity = Polarity::kCompatible;
      } else if (pol == "incompatible") {
        rule.polarity = Polarity::kIncompatible;
      } else {
        schema((*arr)[k], path + ".polarity", "expected \"compatible\" or \"incompatible\"");
      }
      spec.compat_rules.push_back(std::move(rule));
    }
  }
  if (const auto* c = root.get("cost")) {
    auto s = c->value<std::string>();
    if (!s) schema(*c, "cost", "expected an expression string");
    spec.cost = parse_at(*c, "cost", [&] { return parse_expr(*s, space, prob.params); });
  }
  if (spec.objectives.empty()) throw SchemaError("problem declares no objective (maximize = [...])");
  spec.validate();
  return prob;
}

}  // namespace codesign
