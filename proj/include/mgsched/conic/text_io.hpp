#pragma once

// Canonical text form of a Program.
//
//   mgconic 1
//   vars <n> rows <m> cones <k>
//   var <name> <C|B> <lb> <ub>                       (n lines, insertion order)
//   obj <constant> <nterms> {<var> <coef>}           (omitted when empty)
//   row <name> <L|G|E> <rhs> <nterms> {<var> <coef>} (m lines)
//   cone <name> <SOC|RSOC> <nentries>                (k blocks)
//   entry <constant> <nterms> {<var> <coef>}         (one per entry)
//   end
//
// Numbers are printed with 17 significant digits, infinities as inf/-inf, so
// parse(export(p)) reproduces p exactly and re-exports byte-identically.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "mgsched/conic/program.hpp"

namespace mgsched::conic {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
    throw FormatError("name '" + name + "' cannot be exported (empty or whitespace)");
  }
}

inline void write_terms(std::ostream& os, const Program& p, const std::vector<Term>& terms) {
  os << ' ' << terms.size();
  for (const auto& t : terms) os << ' ' << p.variable(t.var).name << ' ' << fmt_num(t.coef);
}

inline double parse_num(const std::string& tok) {
  if (tok == "inf" || tok == "+inf") return kInf;
  if (tok == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw FormatError("bad number '" + tok + "'");
  return v;
}

}  // namespace detail

inline std::string export_text(const Program& p) {
  std::ostringstream os;
  os << "mgconic 1\n";
  os << "vars " << p.num_variables() << " rows " << p.num_rows() << " cones "
     << p.num_cones() << '\n';
  for (const auto& v : p.variables()) {
    detail::check_name(v.name);
    os << "var " << v.name << ' ' << (v.kind == VarKind::binary ? 'B' : 'C') << ' '
       << detail::fmt_num(v.lb) << ' ' << detail::fmt_num(v.ub) << '\n';
  }
  const auto& obj = p.objective();
  if (!obj.terms().empty() || obj.constant() != 0.0) {
    os << "obj " << detail::fmt_num(obj.constant());
    detail::write_terms(os, p, obj.terms());
    os << '\n';
  }
  for (const auto& r : p.rows()) {
    detail::check_name(r.name);
    const char sense = r.sense == Sense::less_equal      ? 'L'
                       : r.sense == Sense::greater_equal ? 'G'
                                                         : 'E';
    os << "row " << r.name << ' ' << sense << ' ' << detail::fmt_num(r.rhs);
    detail::write_terms(os, p, r.terms);
    os << '\n';
  }
  for (const auto& c : p.cones()) {
    detail::check_name(c.name);
    os << "cone " << c.name << ' ' << (c.kind == ConeKind::rotated ? "RSOC" : "SOC") << ' '
       << c.entries.size() << '\n';
    for (const auto& e : c.entries) {
      os << "entry " << detail::fmt_num(e.constant());
      detail::write_terms(os, p, e.terms());
      os << '\n';
    }
  }
  os << "end\n";
  return os.str();
}

inline Program parse_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("line " + std::to_string(lineno) + ": " + what);
  };
  auto next_line = [&](std::istringstream& ls) {
    if (!std::getline(in, line)) throw fail("unexpected end of document");
    ++lineno;
    ls = std::istringstream(line);
  };
  auto tok = [&](std::istringstream& ls) {
    std::string t;
    if (!(ls >> t)) throw fail("missing field");
    return t;
  };
  auto count = [&](std::istringstream& ls) {
    const std::string t = tok(ls);
    try {
      return static_cast<std::size_t>(std::stoull(t));
    } catch (const std::exception&) {
      throw fail("bad count '" + t + "'");
    }
  };

  Program p;
  std::istringstream ls;
  next_line(ls);
  if (tok(ls) != "mgconic" || tok(ls) != "1") throw fail("expected header 'mgconic 1'");
  next_line(ls);
  if (tok(ls) != "vars") throw fail("expected 'vars'");
  const std::size_t nv = count(ls);
  if (tok(ls) != "rows") throw fail("expected 'rows'");
  const std::size_t nr = count(ls);
  if (tok(ls) != "cones") throw fail("expected 'cones'");
  const std::size_t nc = count(ls);

  auto read_terms = [&](std::istringstream& s) {
    std::vector<Term> terms;
    const std::size_t n = count(s);
    terms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string name = tok(s);
      const auto v = p.find_variable(name);
      if (!v) throw fail("unknown variable '" + name + "'");
      terms.push_back({*v, detail::parse_num(tok(s))});
    }
    return terms;
  };

  for (std::size_t i = 0; i < nv; ++i) {
    next_line(ls);
    if (tok(ls) != "var") throw fail("expected 'var'");
    const std::string name = tok(ls);
    const std::string kind = tok(ls);
    const double lb = detail::parse_num(tok(ls));
    const double ub = detail::parse_num(tok(ls));
    if (kind != "C" && kind != "B") throw fail("bad variable kind '" + kind + "'");
    try {
      p.add_variable(name, kind == "B" ? VarKind::binary : VarKind::continuous, lb, ub);
    } catch (const ModelError& e) {
      throw fail(e.what());
    }
  }
  next_line(ls);
  std::string head = tok(ls);
  if (head == "obj") {
    const double c = detail::parse_num(tok(ls));
    p.set_objective(AffineExpr(read_terms(ls), c));
    next_line(ls);
    head = tok(ls);
  }
  for (std::size_t i = 0; i < nr; ++i) {
    if (i > 0) {
      next_line(ls);
      head = tok(ls);
    }
    if (head != "row") throw fail("expected 'row'");
    const std::string name = tok(ls);
    const std::string sense = tok(ls);
    const double rhs = detail::parse_num(tok(ls));
    Sense s{};
    if (sense == "L") {
      s = Sense::less_equal;
    } else if (sense == "G") {
      s = Sense::greater_equal;
    } else if (sense == "E") {
      s = Sense::equal;
    } else {
      throw fail("bad row sense '" + sense + "'");
    }
    p.add_row(name, AffineExpr(read_terms(ls)), s, rhs);
  }
  if (nr > 0) {
    next_line(ls);
    head = tok(ls);
  }
  for (std::size_t i = 0; i < nc; ++i) {
    if (i > 0) {
      next_line(ls);
      head = tok(ls);
    }
    if (head != "cone") throw fail("expected 'cone'");
    const std::string name = tok(ls);
    const std::string kind = tok(ls);
    const std::size_t ne = count(ls);
    std::vector<AffineExpr> entries;
    for (std::size_t k = 0; k < ne; ++k) {
      next_line(ls);
      if (tok(ls) != "entry") throw fail("expected 'entry'");
      const double c = detail::parse_num(tok(ls));
      entries.emplace_back(read_terms(ls), c);
    }
    try {
      if (kind == "SOC") {
        if (ne < 1) throw fail("second-order cone needs at least one entry");
        p.add_second_order_cone(name, entries[0], {entries.begin() + 1, entries.end()});
      } else if (kind == "RSOC") {
        if (ne < 2) throw fail("rotated cone needs at least two entries");
        p.add_rotated_cone(name, entries[0], entries[1], {entries.begin() + 2, entries.end()});
      } else {
        throw fail("bad cone kind '" + kind + "'");
      }
    } catch (const ModelError& e) {
      throw fail(e.what());
    }
  }
  if (nc > 0) {
    next_line(ls);
    head = tok(ls);
  }
  if (head != "end") throw fail("expected 'end'");
  return p;
}

inline void write_text_file(const Program& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << export_text(p);
}

inline Program read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

}  // namespace mgsched::conic
