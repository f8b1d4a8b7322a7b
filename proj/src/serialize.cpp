#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "qea/structconst.hpp"

// File format, version 1: a single JSON object
//   {"version":1, "q":..., "window":[two_j...], "mult":{"two_j":m,...},
//    "f":[[x1,x2,x3,re,im]...], "g":[[x1,x2,re,im]...]}
// with each index x written as [two_j,k,i].  Entries are sorted
// lexicographically and floats carry 17 significant digits, so writing the
// same constants twice produces identical bytes.  Loading validates the
// index invariants (window membership, slot bounds, fusion admissibility,
// support condition); norm-bound violations within the slack are reported
// as warnings, past the slack the file is rejected.

namespace qea {

namespace {

std::string fmt17(double v) {
  if (!std::isfinite(v)) throw DomainError("serialize: non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_index(const IndexX& x) {
  return "[" + std::to_string(x.two_j) + "," + std::to_string(x.k) + "," +
         std::to_string(x.i) + "]";
}

IndexX parse_index(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number_integer() ||
      !j[1].is_number_integer() || !j[2].is_number_integer())
    throw ParseError("constants file: index is not an integer triple");
  return IndexX{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

}  // namespace

std::string serialize(const StructureConstants<double>& sc) {
  std::string out = "{\"version\":1,\"q\":" + fmt17(sc.q) + ",\"window\":[";
  for (std::size_t p = 0; p < sc.window.size(); ++p)
    out += (p ? "," : "") + std::to_string(sc.window[p]);
  out += "],\"mult\":{";
  bool first = true;
  for (const auto& [t, m] : sc.mult) {
    out += std::string(first ? "" : ",") + "\"" + std::to_string(t) +
           "\":" + std::to_string(m);
    first = false;
  }
  out += "},\"f\":[";
  first = true;
  for (const auto& [key, v] : sc.f) {
    out += std::string(first ? "" : ",") + "[" + fmt_index(key[0]) + "," +
           fmt_index(key[1]) + "," + fmt_index(key[2]) + "," +
           fmt17(v.real()) + "," + fmt17(v.imag()) + "]";
    first = false;
  }
  out += "],\"g\":[";
  first = true;
  for (const auto& [key, v] : sc.g) {
    out += std::string(first ? "" : ",") + "[" + fmt_index(key[0]) + "," +
           fmt_index(key[1]) + "," + fmt17(v.real()) + "," +
           fmt17(v.imag()) + "]";
    first = false;
  }
  out += "]}";
  return out;
}

LoadedConstants deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("constants file: ") + ex.what());
  }
  if (!j.is_object()) throw ParseError("constants file: not a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != 1)
    throw ParseError("constants file: unsupported version");
  for (const char* field : {"q", "window", "mult", "f", "g"})
    if (!j.contains(field))
      throw ParseError(std::string("constants file: missing field ") + field);

  LoadedConstants out;
  StructureConstants<double>& sc = out.sc;

  if (!j["q"].is_number()) throw ParseError("constants file: q is not a number");
  sc.q = j["q"].get<double>();
  if (!(sc.q > 0 && sc.q < 1))
    throw ParseError("constants file: q outside (0, 1)");
  const QParam<double> qp(sc.q);

  if (!j["window"].is_array())
    throw ParseError("constants file: window is not an array");
  for (const auto& e : j["window"]) {
    if (!e.is_number_integer() || e.get<int>() < 0)
      throw ParseError("constants file: window spin is not a nonnegative integer");
    sc.window.push_back(e.get<int>());
  }
  if (!std::is_sorted(sc.window.begin(), sc.window.end()) ||
      std::adjacent_find(sc.window.begin(), sc.window.end()) !=
          sc.window.end() ||
      sc.window.empty() || sc.window.front() != 0)
    throw ParseError(
        "constants file: window must be sorted, duplicate-free, and contain "
        "the trivial spin");

  if (!j["mult"].is_object())
    throw ParseError("constants file: mult is not an object");
  for (const auto& [key, val] : j["mult"].items()) {
    int t = 0;
    try {
      std::size_t used = 0;
      t = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ParseError("constants file: mult key is not a spin");
    }
    if (!val.is_number_integer() || val.get<int>() < 0)
      throw ParseError("constants file: multiplicity is not a nonnegative integer");
    if (!sc.in_window(t))
      throw ParseError("constants file: multiplicity for a spin outside the window");
    const IrrepConstants<double> cst(t, qp);
    if (long(val.get<int>()) > cst.N)
      throw ParseError("constants file: multiplicity exceeds the slot bound");
    sc.mult[t] = val.get<int>();
  }
  for (int t : sc.window)
    if (!sc.mult.count(t))
      throw ParseError("constants file: window spin without a multiplicity");
  if (sc.mult.at(0) != 1)
    throw ParseError("constants file: trivial spin multiplicity must be 1");

  auto check_index = [&](const IndexX& x, bool allow_unit) {
    if (!sc.in_window(x.two_j))
      throw ParseError("constants file: index spin outside the window");
    const IrrepConstants<double> cst(x.two_j, qp);
    if (x.k < 1 || long(x.k) > cst.N)
      throw ParseError("constants file: slot index outside the slot bound");
    if (x.i < 1 || x.i > cst.d)
      throw ParseError("constants file: vector index outside the spin dimension");
    if (x.two_j == 0 && !allow_unit)
      throw ParseError("constants file: trivial spin in a nontrivial slot");
    if (x.k > sc.mult.at(x.two_j))
      throw ParseError("constants file: entry outside the occupied slots");
  };
  auto check_bound = [&](int two_j, double mag, const char* which) {
    const double bound = IrrepConstants<double>(two_j, qp).norm_bound;
    if (mag <= bound * (1 + 1e-12)) return;
    if (mag > bound * (1 + tol::bound_slack) * (1 + 1e-12))
      throw ParseError(std::string("constants file: ") + which +
                       " entry exceeds the norm bound past the slack");
    out.warnings.push_back(std::string(which) + " entry of size " +
                           fmt17(mag) + " exceeds the norm bound " +
                           fmt17(bound) + " for spin " +
                           std::to_string(two_j));
  };

  if (!j["f"].is_array()) throw ParseError("constants file: f is not an array");
  for (const auto& e : j["f"]) {
    if (!e.is_array() || e.size() != 5 || !e[3].is_number() ||
        !e[4].is_number())
      throw ParseError("constants file: malformed f entry");
    const IndexX x1 = parse_index(e[0]), x2 = parse_index(e[1]),
                 x3 = parse_index(e[2]);
    check_index(x1, false);
    check_index(x2, false);
    check_index(x3, true);
    const auto fr = fusion_range(x1.two_j, x2.two_j);
    if (std::find(fr.begin(), fr.end(), x3.two_j) == fr.end())
      throw ParseError("constants file: f entry outside the fusion range");
    const std::complex<double> v(e[3].get<double>(), e[4].get<double>());
    check_bound(x1.two_j, std::abs(v), "f");
    if (!sc.f.emplace(FKey{x1, x2, x3}, v).second)
      throw ParseError("constants file: duplicate f entry");
  }

  if (!j["g"].is_array()) throw ParseError("constants file: g is not an array");
  for (const auto& e : j["g"]) {
    if (!e.is_array() || e.size() != 4 || !e[2].is_number() ||
        !e[3].is_number())
      throw ParseError("constants file: malformed g entry");
    const IndexX x1 = parse_index(e[0]), x2 = parse_index(e[1]);
    check_index(x1, false);
    check_index(x2, false);
    if (x1.two_j != x2.two_j)
      throw ParseError("constants file: g entry mixes spin blocks");
    const std::complex<double> v(e[2].get<double>(), e[3].get<double>());
    check_bound(x1.two_j, std::abs(v), "g");
    if (!sc.g.emplace(GKey{x1, x2}, v).second)
      throw ParseError("constants file: duplicate g entry");
  }

  return out;
}

void save_constants(const std::string& path,
                    const StructureConstants<double>& sc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("save_constants: cannot open " + path);
  const std::string text = serialize(sc);
  out.write(text.data(), std::streamsize(text.size()));
  out.put('\n');
  if (!out) throw DomainError("save_constants: write failed for " + path);
}

LoadedConstants load_constants(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_constants: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace qea
