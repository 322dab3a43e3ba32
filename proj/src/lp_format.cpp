#include "codesign/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include <json.hpp>

#include "codesign/error.hpp"

namespace codesign {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_terms(std::ostringstream& out, const std::vector<LinearTerm>& terms,
                 const BlpInstance& inst, const std::string& indent) {
  if (terms.empty()) {
    out << indent << "0 " << inst.variables.front().name;
    return;
  }
  out << indent;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (k > 0 && k % 8 == 0) out << "\n" << indent;
    double c = terms[k].coef;
    out << (std::signbit(c) ? "- " : "+ ") << num(std::abs(c)) << " " << inst.variables[terms[k].var].name
        << " ";
  }
}

std::vector<LinearTerm> dense_terms(const std::vector<double>& coefs) {
  std::vector<LinearTerm> out;
  for (std::size_t v = 0; v < coefs.size(); ++v) {
    if (coefs[v] != 0.0) out.push_back({v, coefs[v]});
  }
  return out;
}

}  // namespace

std::string write_lp(const BlpInstance& inst) {
  inst.validate();
  if (inst.variables.empty()) throw SchemaError("cannot export an instance without variables");
  std::ostringstream out;
  out << "\\ codesign binary linear program\n";
  for (const auto& b : inst.blocks) {
    json j = {{"id", b.module_id}, {"optional", b.optional}, {"components", b.component_names}};
    out << "\\ codesign-module " << j.dump() << "\n";
  }
  for (const auto& l : inst.lifted) {
    out << "\\ codesign-lift " << json{{"parents", l.parents}}.dump() << "\n";
  }
  for (const auto& o : inst.objectives) {
    out << "\\ codesign-objective " << json{{"label", o.label}, {"offset", o.offset}}.dump() << "\n";
  }
  for (const auto& r : inst.rows) {
    json j = {{"name", r.name}, {"kind", to_string(r.kind)}, {"source", r.source},
              {"transformation", r.transformation}};
    out << "\\ codesign-row " << j.dump() << "\n";
  }
  if (inst.objectives.size() <= 1) {
    out << "Maximize\n obj:";
    if (inst.objectives.empty()) {
      out << " 0 " << inst.variables.front().name << "\n";
    } else {
      out << "\n";
      write_terms(out, dense_terms(inst.objectives[0].coefs), inst, "  ");
      out << "\n";
    }
  } else {
    out << "Maximize multi-objectives\n";
    for (std::size_t k = 0; k < inst.objectives.size(); ++k) {
      out << " obj" << k << ": Priority=" << inst.objectives.size() - k
          << " Weight=1 AbsTol=" << num(kTolerance) << " RelTol=0\n";
      write_terms(out, dense_terms(inst.objectives[k].coefs), inst, "  ");
      out << "\n";
    }
  }
  out << "Subject To\n";
  for (const auto& r : inst.rows) {
    out << " " << r.name << ":\n";
    write_terms(out, r.terms, inst, "  ");
    out << (r.sense == Sense::kEqual ? "= " : "<= ") << num(r.rhs) << "\n";
  }
  out << "Binaries\n";
  for (std::size_t v = 0; v < inst.variables.size(); ++v) {
    out << (v % 10 == 0 ? " " : " ") << inst.variables[v].name;
    if (v % 10 == 9 || v + 1 == inst.variables.size()) out << "\n";
  }
  out << "End\n";
  return out.str();
}

namespace {

enum class Section { kNone, kObjective, kMultiObjective, kConstraints, kBounds, kBinaries, kEnd };

std::string lower_trim(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto a = t.find_first_not_of(" \t\r");
  auto b = t.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : t.substr(a, b - a + 1);
}

std::optional<Section> section_of(const std::string& line, bool& minimize) {
  std::string t = lower_trim(line);
  if (t == "maximize" || t == "maximum" || t == "max") return Section::kObjective;
  if (t == "minimize" || t == "minimum" || t == "min") {
    minimize = true;
    return Section::kObjective;
  }
  if (t == "maximize multi-objectives") return Section::kMultiObjective;
  if (t == "minimize multi-objectives") {
    minimize = true;
    return Section::kMultiObjective;
  }
  if (t == "subject to" || t == "such that" || t == "st" || t == "s.t.") return Section::kConstraints;
  if (t == "bounds" || t == "bound") return Section::kBounds;
  if (t == "binaries" || t == "binary" || t == "bin") return Section::kBinaries;
  if (t == "generals" || t == "general" || t == "gen" || t == "semi-continuous" || t == "sos") {
    throw ParseError("LP section '" + t + "' is not supported (binary variables only)");
  }
  if (t == "end") return Section::kEnd;
  return std::nullopt;
}

struct Tok {
  enum Kind { kName, kNumber, kSign, kSense, kColon } kind;
  std::string text;
  double value = 0.0;
  std::size_t line = 0;
};

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("!\"#$%&()/,.;?@_`'{}|~").find(c) != std::string_view::npos;
}

void tokenize(const std::string& line, std::size_t lineno, std::vector<Tok>& out) {
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '+' || c == '-') {
      out.push_back({Tok::kSign, std::string(1, c), 0.0, lineno});
      ++i;
    } else if (c == ':') {
      out.push_back({Tok::kColon, ":", 0.0, lineno});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string s(1, c);
      ++i;
      if (i < line.size() && (line[i] == '=' || line[i] == '<' || line[i] == '>')) s += line[i++];
      std::string norm = (s.find('<') != std::string::npos) ? "<=" : (s.find('>') != std::string::npos) ? ">=" : "=";
      out.push_back({Tok::kSense, norm, 0.0, lineno});
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* start = line.c_str() + i;
      char* end = nullptr;
      double v = std::strtod(start, &end);
      if (end == start) throw ParseError("LP line " + std::to_string(lineno) + ": bad number");
      out.push_back({Tok::kNumber, std::string(start, static_cast<const char*>(end)), v, lineno});
      i += static_cast<std::size_t>(end - start);
    } else if (name_char(c)) {
      std::size_t s = i;
      while (i < line.size() && (name_char(line[i]) || line[i] == '[' || line[i] == ']')) ++i;
      std::string word = line.substr(s, i - s);
      std::string low = lower_trim(word);
      if (low == "inf" || low == "infinity") {
        out.push_back({Tok::kNumber, word, std::numeric_limits<double>::infinity(), lineno});
      } else {
        out.push_back({Tok::kName, word, 0.0, lineno});
      }
    } else {
      throw ParseError("LP line " + std::to_string(lineno) + ": unexpected character '" + std::string(1, c) + "'");
    }
  }
}

struct LinExpr {
  std::vector<std::pair<std::string, double>> terms;
  double constant = 0.0;
};

// Parses a linear expression starting at pos; stops at a sense token, a
// label (name followed by ':') or the end.
LinExpr parse_linear(const std::vector<Tok>& toks, std::size_t& pos) {
  LinExpr e;
  while (pos < toks.size()) {
    const Tok& t = toks[pos];
    if (t.kind == Tok::kSense) break;
    if (t.kind == Tok::kName && pos + 1 < toks.size() && toks[pos + 1].kind == Tok::kColon) break;
    double sign = 1.0;
    while (pos < toks.size() && toks[pos].kind == Tok::kSign) {
      if (toks[pos].text == "-") sign = -sign;
      ++pos;
    }
    double coef = 1.0;
    bool have_num = false;
    if (pos < toks.size() && toks[pos].kind == Tok::kNumber) {
      coef = toks[pos].value;
      have_num = true;
      ++pos;
    }
    if (pos < toks.size() && toks[pos].kind == Tok::kName &&
        !(pos + 1 < toks.size() && toks[pos + 1].kind == Tok::kColon)) {
      e.terms.emplace_back(toks[pos].text, sign * coef);
      ++pos;
    } else if (have_num) {
      e.constant += sign * coef;
    } else {
      throw ParseError("LP line " + std::to_string(t.line) + ": expected a term");
    }
  }
  return e;
}

}  // namespace

BlpInstance read_lp(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<json> modules, lifts, objectives_meta;
  std::map<std::string, json> row_meta;
  Section section = Section::kNone;
  bool minimize = false;
  std::map<Section, std::vector<Tok>> toks;
  std::vector<std::string> binaries;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      auto bs = line.find('\\');
      if (bs != std::string::npos) {
        std::string comment = line.substr(bs + 1);
        auto ws = comment.find_first_not_of(' ');
        if (ws != std::string::npos && comment.compare(ws, 9, "codesign-") == 0) {
          auto sp = comment.find(' ', ws);
          std::string tag = comment.substr(ws, sp - ws);
          json j = json::parse(comment.substr(sp + 1));
          if (tag == "codesign-module") modules.push_back(j);
          else if (tag == "codesign-lift") lifts.push_back(j);
          else if (tag == "codesign-objective") objectives_meta.push_back(j);
          else if (tag == "codesign-row") row_meta[j.at("name").get<std::string>()] = j;
        }
        line = line.substr(0, bs);
      }
      if (lower_trim(line).empty()) continue;
      if (auto s = section_of(line, minimize)) {
        section = *s;
        continue;
      }
      if (section == Section::kNone || section == Section::kEnd) {
        throw ParseError("LP line " + std::to_string(lineno) + ": text outside a section");
      }
      if (section == Section::kObjective || section == Section::kMultiObjective) {
        // Drop "Priority=..." style attributes of multi-objective headers.
        std::string cleaned;
        std::istringstream words(line);
        std::string w;
        while (words >> w) {
          std::string low = lower_trim(w);
          if (low.rfind("priority=", 0) == 0 || low.rfind("weight=", 0) == 0 ||
              low.rfind("abstol=", 0) == 0 || low.rfind("reltol=", 0) == 0) {
            continue;
          }
          cleaned += w + " ";
        }
        tokenize(cleaned, lineno, toks[Section::kObjective]);
      } else if (section == Section::kBinaries) {
        std::istringstream words(line);
        std::string w;
        while (words >> w) binaries.push_back(w);
      } else if (section == Section::kConstraints) {
        tokenize(line, lineno, toks[Section::kConstraints]);
      }
      // Bounds are implied by the binaries section.
    }
  } catch (const json::exception& e) {
    throw ParseError("LP line " + std::to_string(lineno) + ": bad metadata: " + e.what());
  }

  BlpInstance inst;
  std::map<std::string, std::size_t> var_index;
  if (!modules.empty()) {
    for (const auto& m : modules) {
      BlpBlock b{m.at("id").get<std::string>(), m.at("components").get<std::vector<std::string>>(),
                 m.at("optional").get<bool>(), inst.variables.size()};
      std::size_t bi = inst.blocks.size();
      for (std::size_t j = 0; j < b.size(); ++j) {
        inst.variables.push_back({"x_" + std::to_string(bi) + "_" + std::to_string(j), false, bi, j});
      }
      inst.blocks.push_back(std::move(b));
    }
    for (const auto& l : lifts) {
      LiftedBlock lb{l.at("parents").get<std::vector<std::size_t>>(), inst.variables.size(), 1};
      for (std::size_t p : lb.parents) {
        if (p >= inst.blocks.size()) throw ParseError("lifted block parent out of range");
        lb.cells *= inst.blocks[p].size();
      }
      std::size_t li = inst.lifted.size();
      for (std::size_t c = 0; c < lb.cells; ++c) {
        inst.variables.push_back({"z_" + std::to_string(li) + "_" + std::to_string(c), true, li, c});
      }
      inst.lifted.push_back(std::move(lb));
    }
  } else {
    // Plain LP: each binary is its own optional one-component block.
    for (const auto& name : binaries) {
      if (var_index.count(name)) continue;
      std::size_t bi = inst.blocks.size();
      var_index[name] = bi;
      inst.blocks.push_back(BlpBlock{name, {"1"}, true, bi});
      inst.variables.push_back({name, false, bi, 0});
      BlpRow row;
      row.name = "onehot_" + std::to_string(bi);
      row.terms = {{bi, 1.0}};
      row.sense = Sense::kLessEqual;
      row.rhs = 1.0;
      row.kind = RowKind::kOneHot;
      row.source = name;
      row.transformation = "one-hot";
      inst.rows.push_back(std::move(row));
    }
  }
  for (std::size_t v = 0; v < inst.variables.size(); ++v) var_index[inst.variables[v].name] = v;
  auto var_of = [&](const std::string& name, std::size_t ln) {
    auto it = var_index.find(name);
    if (it == var_index.end()) {
      throw ParseError("LP line " + std::to_string(ln) + ": unknown or non-binary variable '" + name + "'");
    }
    return it->second;
  };

  // Objectives.
  {
    const auto& t = toks[Section::kObjective];
    std::size_t pos = 0;
    while (pos < t.size()) {
      std::string label = "obj" + std::to_string(inst.objectives.size());
      std::size_t ln = t[pos].line;
      if (t[pos].kind == Tok::kName && pos + 1 < t.size() && t[pos + 1].kind == Tok::kColon) {
        label = t[pos].text;
        pos += 2;
      }
      LinExpr e = parse_linear(t, pos);
      if (pos < t.size() && t[pos].kind == Tok::kSense) {
        throw ParseError("LP line " + std::to_string(t[pos].line) + ": relation in objective");
      }
      BlpObjective o{label, std::vector<double>(inst.variables.size(), 0.0), e.constant};
      for (const auto& [name, c] : e.terms) o.coefs[var_of(name, ln)] += c;
      if (minimize) {
        for (double& c : o.coefs) c = -c;
        o.offset = -o.offset;
      }
      inst.objectives.push_back(std::move(o));
    }
    for (std::size_t k = 0; k < inst.objectives.size() && k < objectives_meta.size(); ++k) {
      inst.objectives[k].label = objectives_meta[k].at("label").get<std::string>();
      inst.objectives[k].offset += objectives_meta[k].at("offset").get<double>();
    }
  }

  // Rows.
  {
    const auto& t = toks[Section::kConstraints];
    std::size_t pos = 0;
    while (pos < t.size()) {
      BlpRow row;
      std::size_t ln = t[pos].line;
      if (t[pos].kind == Tok::kName && pos + 1 < t.size() && t[pos + 1].kind == Tok::kColon) {
        row.name = t[pos].text;
        pos += 2;
      } else {
        row.name = "r" + std::to_string(inst.rows.size());
      }
      LinExpr lhs = parse_linear(t, pos);
      if (pos >= t.size() || t[pos].kind != Tok::kSense) {
        throw ParseError("LP line " + std::to_string(ln) + ": constraint '" + row.name + "' lacks a relation");
      }
      std::string sense = t[pos++].text;
      // rhs is a single signed constant; anything after it starts a new row.
      LinExpr rhs;
      double rsign = 1.0;
      while (pos < t.size() && t[pos].kind == Tok::kSign) {
        if (t[pos].text == "-") rsign = -rsign;
        ++pos;
      }
      if (pos >= t.size() || t[pos].kind != Tok::kNumber) {
        throw ParseError("LP line " + std::to_string(ln) + ": constraint '" + row.name + "' needs a constant right-hand side");
      }
      rhs.constant = rsign * t[pos++].value;
      double r = rhs.constant - lhs.constant;
      std::map<std::size_t, double> merged;
      for (const auto& [name, c] : lhs.terms) merged[var_of(name, ln)] += c;
      double sign = sense == ">=" ? -1.0 : 1.0;
      for (const auto& [v, c] : merged) {
        if (c != 0.0) row.terms.push_back({v, sign * c});
      }
      row.rhs = sign * r;
      row.sense = sense == "=" ? Sense::kEqual : Sense::kLessEqual;
      row.kind = RowKind::kConstraint;
      if (row.name.rfind("onehot_", 0) == 0) row.kind = RowKind::kOneHot;
      if (row.name.rfind("link_", 0) == 0) row.kind = RowKind::kLinking;
      if (auto it = row_meta.find(row.name); it != row_meta.end()) {
        std::string kind = it->second.at("kind").get<std::string>();
        for (RowKind k : {RowKind::kOneHot, RowKind::kLinking, RowKind::kConstraint, RowKind::kCompat,
                          RowKind::kRestriction}) {
          if (kind == to_string(k)) row.kind = k;
        }
        row.source = it->second.at("source").get<std::string>();
        row.transformation = it->second.at("transformation").get<std::string>();
      } else {
        row.source = row.name;
      }
      inst.rows.push_back(std::move(row));
    }
  }
  try {
    inst.validate();
  } catch (const SchemaError& e) {
    throw ParseError(std::string("LP file does not describe a valid instance: ") + e.what());
  }
  return inst;
}

std::string provenance_json(const BlpInstance& inst, const LoweringReport& report) {
  json j;
  j["variables"] = json::array();
  for (const auto& v : inst.variables) {
    if (v.lifted) {
      std::vector<std::string> parents;
      for (std::size_t p : inst.lifted[v.block].parents) parents.push_back(inst.blocks[p].module_id);
      j["variables"].push_back({{"name", v.name}, {"lifted", parents}, {"cell", v.index}});
    } else {
      j["variables"].push_back({{"name", v.name},
                                {"module", inst.blocks[v.block].module_id},
                                {"component", inst.blocks[v.block].component_names[v.index]}});
    }
  }
  j["rows"] = json::array();
  for (const auto& r : inst.rows) {
    j["rows"].push_back({{"name", r.name}, {"kind", to_string(r.kind)}, {"source", r.source},
                         {"transformation", r.transformation}});
  }
  j["lowering"] = json::array();
  for (const auto& e : report.entries) {
    json entry = {{"label", e.label},
                  {"role", e.role},
                  {"transformation", to_string(e.transformation)},
                  {"exactness", to_string(e.exactness)},
                  {"rows", e.rows}};
    if (e.surrogate) entry["surrogate"] = to_string(*e.surrogate);
    if (!e.note.empty()) entry["note"] = e.note;
    j["lowering"].push_back(entry);
  }
  return j.dump(2) + "\n";
}

}  // namespace codesign
