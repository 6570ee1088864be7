#include "geoflow/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace geoflow {

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string> tokens;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

[[noreturn]] void syntax(int line, const std::string& token, const std::string& what) {
  throw Error(ErrorCode::Syntax, "line " + std::to_string(line) + ": " + what + " (at '" + token + "')", line);
}

Rational parse_prob(const std::string& tok, int line) {
  try {
    return parse_rational(tok);
  } catch (const Error&) {
    syntax(line, tok, "malformed probability");
  }
}

struct LineRefs {
  int q = 0;
  int delta = 0;
  std::map<std::string, int> ray;
  std::vector<int> trans;
  std::vector<int> exits;
  std::vector<int> entries;
};

}  // namespace

QuotientModel parse_model(std::string_view text) {
  QuotientModel model;
  LineRefs lines;
  bool have_q = false;
  bool have_delta = false;
  bool have_compact = false;
  double delta = 0.0;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const auto tok = tokenize(raw);
    if (tok.empty()) continue;
    const std::string& head = tok[0];
    const auto arity = [&](std::size_t n) {
      if (tok.size() != n) syntax(line_no, head, "'" + head + "' expects " + std::to_string(n - 1) + " argument(s)");
    };

    if (head == "q") {
      arity(2);
      if (have_q) syntax(line_no, head, "duplicate q directive");
      int q = 0;
      const auto [ptr, ec] = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), q);
      if (ec != std::errc() || ptr != tok[1].data() + tok[1].size()) syntax(line_no, tok[1], "q must be an integer");
      if (q < 2) syntax(line_no, tok[1], "q must be >= 2");
      model.q = q;
      have_q = true;
      lines.q = line_no;
    } else if (head == "delta") {
      arity(2);
      if (have_delta) syntax(line_no, head, "duplicate delta directive");
      const auto [ptr, ec] = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), delta);
      if (ec != std::errc() || ptr != tok[1].data() + tok[1].size() || !std::isfinite(delta)) {
        syntax(line_no, tok[1], "delta must be a finite number");
      }
      have_delta = true;
      lines.delta = line_no;
    } else if (head == "ray") {
      arity(4);
      if (tok[2] != "attach") syntax(line_no, tok[2], "expected 'attach'");
      if (lines.ray.count(tok[1])) {
        throw Error(ErrorCode::DuplicateRay, "line " + std::to_string(line_no) + ": duplicate ray '" + tok[1] + "'", line_no);
      }
      lines.ray[tok[1]] = line_no;
      model.rays.push_back(RaySpec{tok[1], tok[3], 0, 1, 0});
    } else if (head == "compact") {
      arity(2);
      if (have_compact) syntax(line_no, head, "duplicate compact directive");
      if (tok[1] == "none") {
        model.mode = CoreMode::None;
      } else if (tok[1] == "point") {
        model.mode = CoreMode::Point;
      } else if (tok[1] == "matrix") {
        model.mode = CoreMode::Matrix;
      } else {
        syntax(line_no, tok[1], "expected none, point or matrix");
      }
      have_compact = true;
    } else if (head == "state") {
      arity(2);
      model.compact.states.push_back(tok[1]);
    } else if (head == "trans") {
      arity(4);
      model.compact.trans.push_back(Link{tok[1], tok[2], parse_prob(tok[3], line_no)});
      lines.trans.push_back(line_no);
    } else if (head == "exit") {
      arity(4);
      model.compact.exits.push_back(Link{tok[1], tok[2], parse_prob(tok[3], line_no)});
      lines.exits.push_back(line_no);
    } else if (head == "entry") {
      arity(4);
      model.compact.entries.push_back(Link{tok[1], tok[2], parse_prob(tok[3], line_no)});
      lines.entries.push_back(line_no);
    } else {
      syntax(line_no, head, "unknown directive");
    }
  }

  if (!have_q) throw Error(ErrorCode::Syntax, "missing 'q' directive", 0);
  for (auto& ray : model.rays) {
    ray.q = model.q;
    ray.down_index = model.q;
  }
  if (have_delta) {
    model.delta = delta;
    model.lattice = false;
    if (delta <= half_log_threshold(model.q)) {
      throw Error(ErrorCode::DeltaTooSmall,
                  "line " + std::to_string(lines.delta) + ": delta = " + format_double(delta) +
                      " must exceed (1/2) ln q = " + format_double(half_log_threshold(model.q)),
                  lines.delta);
    }
  } else {
    model.delta = std::log(static_cast<double>(model.q));
    model.lattice = true;
  }

  // Vertex references, reported with the line that made them.
  std::set<std::string> known;
  if (model.mode == CoreMode::Matrix) {
    known.insert(model.compact.states.begin(), model.compact.states.end());
  } else if (!model.rays.empty()) {
    known.insert(model.rays.front().attach);
  }
  const auto unknown = [](int line, const std::string& name) {
    throw Error(ErrorCode::UnknownVertex, "line " + std::to_string(line) + ": unknown vertex '" + name + "'", line);
  };
  if (model.mode == CoreMode::Matrix) {
    for (const auto& ray : model.rays) {
      if (!known.count(ray.attach)) unknown(lines.ray[ray.id], ray.attach);
    }
  }
  for (std::size_t i = 0; i < model.compact.trans.size(); ++i) {
    const auto& t = model.compact.trans[i];
    if (!known.count(t.from)) unknown(lines.trans[i], t.from);
    if (!known.count(t.to)) unknown(lines.trans[i], t.to);
  }
  for (std::size_t i = 0; i < model.compact.exits.size(); ++i) {
    const auto& x = model.compact.exits[i];
    if (!known.count(x.from)) unknown(lines.exits[i], x.from);
    if (!lines.ray.count(x.to)) unknown(lines.exits[i], x.to);
  }
  for (std::size_t i = 0; i < model.compact.entries.size(); ++i) {
    const auto& e = model.compact.entries[i];
    if (!lines.ray.count(e.from)) unknown(lines.entries[i], e.from);
    if (!known.count(e.to)) unknown(lines.entries[i], e.to);
  }

  const auto violations = validate_model(model);
  if (!violations.empty()) {
    std::string message = "invalid model:";
    for (const auto& v : violations) {
      message += " [" + std::string(to_string(v.rule)) + " at " + v.location + ": " + v.detail + "]";
    }
    throw Error(ErrorCode::InvalidModel, message);
  }
  return model;
}

QuotientModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_model(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what(), e.line());
  }
}

std::string serialize_model(const QuotientModel& model) {
  std::ostringstream out;
  out << "q " << model.q << '\n';
  if (!model.lattice) out << "delta " << format_double(model.delta) << '\n';
  switch (model.mode) {
    case CoreMode::None: out << "compact none\n"; break;
    case CoreMode::Point: out << "compact point\n"; break;
    case CoreMode::Matrix: out << "compact matrix\n"; break;
  }
  for (const auto& s : model.compact.states) out << "state " << s << '\n';
  for (const auto& r : model.rays) out << "ray " << r.id << " attach " << r.attach << '\n';
  for (const auto& t : model.compact.trans) out << "trans " << t.from << ' ' << t.to << ' ' << format_rational(t.prob) << '\n';
  for (const auto& x : model.compact.exits) out << "exit " << x.from << ' ' << x.to << ' ' << format_rational(x.prob) << '\n';
  for (const auto& e : model.compact.entries) out << "entry " << e.from << ' ' << e.to << ' ' << format_rational(e.prob) << '\n';
  return out.str();
}

}  // namespace geoflow
