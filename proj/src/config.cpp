#include "nls/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nls/error.hpp"

namespace nls {

using nlohmann::json;

namespace {

// Maps JSON paths like "ensemble.terms[2].word" to the line where the
// value starts. Only run on text nlohmann has already accepted.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : t_(text) {
    skip();
    if (pos_ < t_.size()) value("");
  }

  int line_of(std::string path) const {
    while (true) {
      if (auto it = lines_.find(path); it != lines_.end()) return it->second;
      if (path.empty()) return 0;
      const auto cut = path.find_last_of(".[");
      path = cut == std::string::npos ? "" : path.substr(0, cut);
    }
  }

 private:
  void skip() {
    while (pos_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[pos_]))) {
      if (t_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string s;
    ++pos_;  // opening quote
    while (pos_ < t_.size() && t_[pos_] != '"') {
      if (t_[pos_] == '\\') ++pos_;
      if (pos_ < t_.size()) s += t_[pos_++];
    }
    ++pos_;
    return s;
  }

  void value(const std::string& path) {
    lines_.emplace(path, line_);
    const char c = t_[pos_];
    if (c == '{') {
      ++pos_;
      skip();
      if (t_[pos_] == '}') {
        ++pos_;
        return;
      }
      while (true) {
        skip();
        const int key_line = line_;
        const std::string key = string_token();
        const std::string child = path.empty() ? key : path + "." + key;
        skip();
        ++pos_;  // ':'
        skip();
        lines_.emplace(child, key_line);
        value(child);
        skip();
        if (t_[pos_++] == '}') return;
      }
    } else if (c == '[') {
      ++pos_;
      skip();
      if (t_[pos_] == ']') {
        ++pos_;
        return;
      }
      for (int i = 0;; ++i) {
        skip();
        value(path + "[" + std::to_string(i) + "]");
        skip();
        if (t_[pos_++] == ']') return;
      }
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < t_.size() && t_[pos_] != ',' && t_[pos_] != '}' && t_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(t_[pos_])))
        ++pos_;
    }
  }

  const std::string& t_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : index_(text), origin_(std::move(origin)) {}

  [[noreturn]] void error(const std::string& path, const std::string& msg) const {
    const int line = index_.line_of(path);
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    fail(ErrorKind::Config, where + ": " + (path.empty() ? "" : path + ": ") + msg);
  }

  void keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) error(path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
      if (!ok.count(k)) error(join(path, k), "unknown key '" + k + "'");
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

  double number(const json& j, const std::string& path) const {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
      try {
        return evaluate_number(j.get<std::string>());
      } catch (const Error& e) {
        error(path, e.what());
      }
    }
    error(path, "expected a number");
  }

  long long integer(const json& j, const std::string& path) const {
    if (j.is_number_integer()) return j.get<long long>();
    const double v = number(j, path);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) error(path, "expected an integer");
    return static_cast<long long>(v);
  }

  bool boolean(const json& j, const std::string& path) const {
    if (!j.is_boolean()) error(path, "expected true or false");
    return j.get<bool>();
  }

  std::string string(const json& j, const std::string& path) const {
    if (!j.is_string()) error(path, "expected a string");
    return j.get<std::string>();
  }

  const json& array(const json& j, const std::string& path) const {
    if (!j.is_array()) error(path, "expected an array");
    return j;
  }

 private:
  LineIndex index_;
  std::string origin_;
};

MatrixExpression parse_expression(const Reader& rd, const json& j, const std::string& path,
                                  const std::string& default_id) {
  rd.keys(j, path, {"id", "terms", "divisor"});
  if (!j.contains("terms")) rd.error(path, "missing 'terms'");
  std::vector<ExpressionTerm> terms;
  const auto& arr = rd.array(j["terms"], Reader::join(path, "terms"));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string tp = Reader::at(Reader::join(path, "terms"), i);
    rd.keys(arr[i], tp, {"word", "coef"});
    if (!arr[i].contains("word")) rd.error(tp, "missing 'word'");
    ExpressionTerm t;
    t.word = rd.string(arr[i]["word"], Reader::join(tp, "word"));
    if (t.word.find('+') != std::string::npos)
      rd.error(Reader::join(tp, "word"), "list words singly; sums like 'AB+BA' are not accepted");
    t.coefficient = arr[i].contains("coef") ? rd.number(arr[i]["coef"], Reader::join(tp, "coef")) : 1.0;
    terms.push_back(t);
  }
  const double divisor = j.contains("divisor") ? rd.number(j["divisor"], Reader::join(path, "divisor")) : 1.0;
  const std::string id = j.contains("id") ? rd.string(j["id"], Reader::join(path, "id")) : default_id;
  try {
    return MatrixExpression(terms, divisor, id);
  } catch (const Error& e) {
    rd.error(path, e.what());
  }
}

Custom1D builtin_custom(const Reader& rd, const std::string& name, const std::string& path) {
  Custom1D c;
  c.name = name;
  if (name == "tanh") {
    c.evaluate = [](double x) { return std::tanh(x); };
    c.derivative = [](double x) {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    };
  } else if (name == "sin") {
    c.evaluate = [](double x) { return std::sin(x); };
    c.derivative = [](double x) { return std::cos(x); };
  } else if (name == "abs") {
    c.evaluate = [](double x) { return std::abs(x); };
    c.derivative = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    c.smooth = false;
  } else {
    rd.error(path, "unknown custom function '" + name + "' (available: tanh, sin, abs)");
  }
  return c;
}

FunctionDescriptor parse_function(const Reader& rd, const json& j, const std::string& path) {
  rd.keys(j, path, {"kind", "terms", "name"});
  if (!j.contains("kind")) rd.error(path, "missing 'kind'");
  const std::string kind = rd.string(j["kind"], Reader::join(path, "kind"));
  if (kind == "relu") return FunctionDescriptor::relu();
  if (kind == "max2") return FunctionDescriptor::max2();
  if (kind == "identity") return FunctionDescriptor::identity();
  if (kind == "custom") {
    if (!j.contains("name")) rd.error(path, "custom function needs 'name'");
    return FunctionDescriptor(builtin_custom(rd, rd.string(j["name"], Reader::join(path, "name")),
                                             Reader::join(path, "name")));
  }
  if (kind != "poly") rd.error(Reader::join(path, "kind"), "unknown function kind '" + kind + "'");
  if (!j.contains("terms")) rd.error(path, "polynomial needs 'terms'");
  const std::string tpath = Reader::join(path, "terms");
  const auto& arr = rd.array(j["terms"], tpath);
  if (arr.empty()) rd.error(tpath, "polynomial needs at least one term");
  Polynomial p;
  p.arity = -1;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ip = Reader::at(tpath, i);
    rd.keys(arr[i], ip, {"exps", "coef"});
    if (!arr[i].contains("exps")) rd.error(ip, "missing 'exps'");
    const auto& ex = rd.array(arr[i]["exps"], Reader::join(ip, "exps"));
    std::vector<int> e;
    for (std::size_t k = 0; k < ex.size(); ++k) {
      const auto v = rd.integer(ex[k], Reader::at(Reader::join(ip, "exps"), k));
      if (v < 0 || v > 24) rd.error(Reader::join(ip, "exps"), "exponents must be in [0, 24]");
      e.push_back(static_cast<int>(v));
    }
    if (e.empty()) rd.error(Reader::join(ip, "exps"), "empty exponent tuple");
    if (p.arity < 0) p.arity = static_cast<int>(e.size());
    if (static_cast<int>(e.size()) != p.arity) rd.error(Reader::join(ip, "exps"), "exponent tuples must have equal length");
    const double c = arr[i].contains("coef") ? rd.number(arr[i]["coef"], Reader::join(ip, "coef")) : 1.0;
    p.terms[e] += c;
  }
  try {
    return FunctionDescriptor(p);
  } catch (const Error& e) {
    rd.error(path, e.what());
  }
}

TrimRule parse_trim(const Reader& rd, const std::string& s, const std::string& path) {
  if (s == "none") return TrimRule::none();
  auto arg = [&](const std::string& prefix) -> std::optional<std::string> {
    if (s.rfind(prefix + "(", 0) == 0 && s.back() == ')') return s.substr(prefix.size() + 1, s.size() - prefix.size() - 2);
    return std::nullopt;
  };
  try {
    if (auto a = arg("topK")) return TrimRule::top_k(static_cast<int>(evaluate_number(*a)));
    if (auto a = arg("iqr")) return TrimRule::iqr(evaluate_number(*a));
  } catch (const Error&) {
  }
  rd.error(path, "trim must be none, topK(k) or iqr(c)");
}

std::vector<std::pair<int, int>> parse_pattern(const Reader& rd, const json& j, const std::string& path) {
  std::vector<std::pair<int, int>> out;
  const auto& arr = rd.array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ip = Reader::at(path, i);
    if (!arr[i].is_array() || arr[i].size() != 2) rd.error(ip, "each pattern entry is an index pair [i, j]");
    out.emplace_back(static_cast<int>(rd.integer(arr[i][0], ip)), static_cast<int>(rd.integer(arr[i][1], ip)));
  }
  return out;
}

}  // namespace

double evaluate_number(const std::string& expression) {
  std::size_t pos = 0;
  const std::string& s = expression;
  auto skip = [&] {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  };
  auto bad = [&](const std::string& why) -> double {
    fail(ErrorKind::Config, "cannot evaluate '" + s + "': " + why);
  };
  std::function<double()> expr, term, factor;
  factor = [&]() -> double {
    skip();
    if (pos >= s.size()) return bad("unexpected end");
    if (s[pos] == '-') {
      ++pos;
      return -factor();
    }
    if (s[pos] == '+') {
      ++pos;
      return factor();
    }
    if (s[pos] == '(') {
      ++pos;
      const double v = expr();
      skip();
      if (pos >= s.size() || s[pos] != ')') return bad("missing ')'");
      ++pos;
      return v;
    }
    if (s.compare(pos, 4, "sqrt") == 0) {
      pos += 4;
      skip();
      if (pos >= s.size() || s[pos] != '(') return bad("sqrt needs '('");
      const double v = factor();
      if (v < 0.0) return bad("sqrt of a negative number");
      return std::sqrt(v);
    }
    if (s.compare(pos, 2, "pi") == 0) {
      pos += 2;
      return std::numbers::pi;
    }
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s.substr(pos), &used);
    } catch (const std::exception&) {
      return bad("expected a number at position " + std::to_string(pos));
    }
    pos += used;
    return v;
  };
  term = [&]() -> double {
    double v = factor();
    while (true) {
      skip();
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
        v *= factor();
      } else if (pos < s.size() && s[pos] == '/') {
        ++pos;
        v /= factor();
      } else {
        return v;
      }
    }
  };
  expr = [&]() -> double {
    double v = term();
    while (true) {
      skip();
      if (pos < s.size() && s[pos] == '+') {
        ++pos;
        v += term();
      } else if (pos < s.size() && s[pos] == '-') {
        ++pos;
        v -= term();
      } else {
        return v;
      }
    }
  };
  const double v = expr();
  skip();
  if (pos != s.size()) bad("trailing characters");
  if (!std::isfinite(v)) bad("not finite");
  return v;
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);  // comments allowed
  } catch (const json::parse_error& e) {
    // Byte offset -> line number.
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte ? byte - 1 : 0), '\n'));
    fail(ErrorKind::Config, origin + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
  }
  const Reader rd(text, origin);
  rd.keys(root, "", {"name", "ensemble", "function", "run", "compare", "verify"});
  ExperimentConfig cfg;
  if (root.contains("name")) cfg.name = rd.string(root["name"], "name");

  if (!root.contains("ensemble")) rd.error("", "missing 'ensemble' section");
  const json& ens = root["ensemble"];
  rd.keys(ens, "ensemble", {"id", "terms", "divisor", "matrices", "covariance", "mixed_free_cumulants"});
  if (ens.contains("matrices")) {
    if (ens.contains("terms")) rd.error("ensemble", "use either 'matrices' or a single 'terms' list");
    const auto& arr = rd.array(ens["matrices"], "ensemble.matrices");
    if (arr.empty()) rd.error("ensemble.matrices", "at least one matrix is required");
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.ensemble.members.push_back(
          parse_expression(rd, arr[i], Reader::at("ensemble.matrices", i), "X" + std::to_string(i + 1)));
  } else {
    json single = json::object();
    for (const char* k : {"id", "terms", "divisor"})
      if (ens.contains(k)) single[k] = ens[k];
    cfg.ensemble.members.push_back(parse_expression(rd, single, "ensemble", "X"));
  }
  const int l = cfg.ensemble.size();
  if (ens.contains("covariance")) {
    const auto& rows = rd.array(ens["covariance"], "ensemble.covariance");
    if (static_cast<int>(rows.size()) != l) rd.error("ensemble.covariance", "must be an l x l matrix");
    Eigen::MatrixXd c(l, l);
    for (int r = 0; r < l; ++r) {
      const auto rp = Reader::at("ensemble.covariance", r);
      const auto& row = rd.array(rows[r], rp);
      if (static_cast<int>(row.size()) != l) rd.error(rp, "must have l entries");
      for (int s = 0; s < l; ++s) c(r, s) = rd.number(row[s], Reader::at(rp, s));
    }
    cfg.covariance = c;
  }
  if (ens.contains("mixed_free_cumulants")) {
    const std::string mp = "ensemble.mixed_free_cumulants";
    const json& m = ens["mixed_free_cumulants"];
    rd.keys(m, mp, {"order", "values"});
    if (!m.contains("order") || !m.contains("values")) rd.error(mp, "needs 'order' and 'values'");
    const int order = static_cast<int>(rd.integer(m["order"], Reader::join(mp, "order")));
    if (order < 1 || order > kMaxFreeOrder) rd.error(Reader::join(mp, "order"), "order out of range");
    MixedFreeCumulants mixed(l, order);
    const auto& vals = rd.array(m["values"], Reader::join(mp, "values"));
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const auto vp = Reader::at(Reader::join(mp, "values"), i);
      rd.keys(vals[i], vp, {"labels", "value"});
      if (!vals[i].contains("labels") || !vals[i].contains("value")) rd.error(vp, "needs 'labels' and 'value'");
      std::vector<int> word;
      const auto& lab = rd.array(vals[i]["labels"], Reader::join(vp, "labels"));
      for (std::size_t k = 0; k < lab.size(); ++k) {
        const auto v = rd.integer(lab[k], Reader::join(vp, "labels"));
        if (v < 1 || v > l) rd.error(Reader::join(vp, "labels"), "labels are 1-based matrix indices");
        word.push_back(static_cast<int>(v) - 1);
      }
      try {
        mixed.set(word, rd.number(vals[i]["value"], Reader::join(vp, "value")));
      } catch (const Error& e) {
        rd.error(vp, e.what());
      }
    }
    cfg.mixed = mixed;
  }

  if (!root.contains("function")) rd.error("", "missing 'function' section");
  cfg.function = parse_function(rd, root["function"], "function");

  if (root.contains("run")) {
    const json& run = root["run"];
    rd.keys(run, "run", {"n", "realizations", "auto_center", "trim", "dominance", "order", "bins", "jobs"});
    if (run.contains("n")) cfg.n = static_cast<int>(rd.integer(run["n"], "run.n"));
    if (run.contains("realizations")) cfg.realizations = static_cast<int>(rd.integer(run["realizations"], "run.realizations"));
    if (run.contains("auto_center")) cfg.auto_center = rd.boolean(run["auto_center"], "run.auto_center");
    if (run.contains("trim")) cfg.trim = parse_trim(rd, rd.string(run["trim"], "run.trim"), "run.trim");
    if (run.contains("dominance")) cfg.dominance = rd.number(run["dominance"], "run.dominance");
    if (run.contains("order")) cfg.order = static_cast<int>(rd.integer(run["order"], "run.order"));
    if (run.contains("bins")) cfg.bins = static_cast<int>(rd.integer(run["bins"], "run.bins"));
    if (run.contains("jobs")) cfg.jobs = static_cast<int>(rd.integer(run["jobs"], "run.jobs"));
  }

  if (root.contains("compare")) {
    const json& c = root["compare"];
    rd.keys(c, "compare", {"ks_factor", "moment_tolerance", "moments", "cumulant_orders", "cumulant_tolerance",
                           "baseline", "theta_override"});
    auto& s = cfg.compare;
    if (c.contains("ks_factor")) s.ks_factor = rd.number(c["ks_factor"], "compare.ks_factor");
    if (c.contains("moment_tolerance")) s.moment_tolerance = rd.number(c["moment_tolerance"], "compare.moment_tolerance");
    if (c.contains("moments")) s.moments = static_cast<int>(rd.integer(c["moments"], "compare.moments"));
    if (c.contains("cumulant_tolerance"))
      s.cumulant_tolerance = rd.number(c["cumulant_tolerance"], "compare.cumulant_tolerance");
    if (c.contains("baseline")) s.baseline = rd.boolean(c["baseline"], "compare.baseline");
    if (c.contains("cumulant_orders")) {
      s.cumulant_orders.clear();
      const auto& arr = rd.array(c["cumulant_orders"], "compare.cumulant_orders");
      for (std::size_t i = 0; i < arr.size(); ++i)
        s.cumulant_orders.push_back(static_cast<int>(rd.integer(arr[i], Reader::at("compare.cumulant_orders", i))));
    }
    if (c.contains("theta_override")) {
      std::vector<double> t;
      const auto& arr = rd.array(c["theta_override"], "compare.theta_override");
      for (std::size_t i = 0; i < arr.size(); ++i) t.push_back(rd.number(arr[i], Reader::at("compare.theta_override", i)));
      cfg.theta_override = t;
    }
  }

  if (root.contains("verify")) {
    const json& v = root["verify"];
    rd.keys(v, "verify", {"n_grid", "samples", "relabelings", "batches", "slope_tolerance", "scaling", "limits",
                          "cumulants"});
    auto& s = cfg.verify;
    if (v.contains("n_grid")) {
      s.n_grid.clear();
      const auto& arr = rd.array(v["n_grid"], "verify.n_grid");
      for (std::size_t i = 0; i < arr.size(); ++i)
        s.n_grid.push_back(static_cast<int>(rd.integer(arr[i], Reader::at("verify.n_grid", i))));
    }
    if (v.contains("samples")) s.samples = rd.integer(v["samples"], "verify.samples");
    if (v.contains("relabelings")) s.relabelings = static_cast<int>(rd.integer(v["relabelings"], "verify.relabelings"));
    if (v.contains("batches")) s.batches = static_cast<int>(rd.integer(v["batches"], "verify.batches"));
    if (v.contains("slope_tolerance")) s.slope_tolerance = rd.number(v["slope_tolerance"], "verify.slope_tolerance");
    if (v.contains("cumulants")) s.cumulants = rd.boolean(v["cumulants"], "verify.cumulants");
    if (v.contains("scaling")) {
      const auto& arr = rd.array(v["scaling"], "verify.scaling");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto p = Reader::at("verify.scaling", i);
        rd.keys(arr[i], p, {"name", "pattern", "ensemble", "function", "auto_center", "expected_slope"});
        if (!arr[i].contains("pattern") || !arr[i].contains("expected_slope"))
          rd.error(p, "needs 'pattern' and 'expected_slope'");
        ScalingTaskSpec t;
        t.name = arr[i].contains("name") ? rd.string(arr[i]["name"], Reader::join(p, "name")) : "scaling" + std::to_string(i + 1);
        t.pairs = parse_pattern(rd, arr[i]["pattern"], Reader::join(p, "pattern"));
        if (arr[i].contains("ensemble"))
          t.ensemble = parse_expression(rd, arr[i]["ensemble"], Reader::join(p, "ensemble"), "X");
        if (arr[i].contains("function")) t.function = parse_function(rd, arr[i]["function"], Reader::join(p, "function"));
        if (arr[i].contains("auto_center")) t.auto_center = rd.boolean(arr[i]["auto_center"], Reader::join(p, "auto_center"));
        t.expected_slope = rd.number(arr[i]["expected_slope"], Reader::join(p, "expected_slope"));
        s.scaling.push_back(std::move(t));
      }
    }
    if (v.contains("limits")) {
      const auto& arr = rd.array(v["limits"], "verify.limits");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto p = Reader::at("verify.limits", i);
        rd.keys(arr[i], p, {"name", "order", "ensemble"});
        if (!arr[i].contains("order")) rd.error(p, "needs 'order'");
        LimitSpec ls;
        ls.name = arr[i].contains("name") ? rd.string(arr[i]["name"], Reader::join(p, "name")) : "limit" + std::to_string(i + 1);
        ls.order = static_cast<int>(rd.integer(arr[i]["order"], Reader::join(p, "order")));
        if (arr[i].contains("ensemble"))
          ls.ensemble = parse_expression(rd, arr[i]["ensemble"], Reader::join(p, "ensemble"), "X");
        s.limits.push_back(std::move(ls));
      }
    }
  }

  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, origin + ": " + e.what());
  }
  return cfg;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path), path); }

}  // namespace nls
