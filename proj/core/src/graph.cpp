#include "geoflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace geoflow {

double QuotientModel::rho() const {
  if (lattice) return 1.0 / q;
  return q * std::exp(-2.0 * delta);
}

Rational QuotientModel::exact_rho() const {
  if (!lattice) throw Error(ErrorCode::NotLattice, "exact backend requires the lattice exponent delta = ln q");
  return Rational(1, q);
}

std::vector<std::string> QuotientModel::core_vertices() const {
  if (mode == CoreMode::Matrix) return compact.states;
  if (rays.empty()) return {};
  return {rays.front().attach};
}

std::optional<std::uint32_t> QuotientModel::ray_index(const std::string& id) const {
  for (std::size_t r = 0; r < rays.size(); ++r) {
    if (rays[r].id == id) return static_cast<std::uint32_t>(r);
  }
  return std::nullopt;
}

std::optional<std::uint32_t> QuotientModel::core_index(const std::string& name) const {
  const auto names = core_vertices();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

QuotientModel make_pure_ray(int q) {
  QuotientModel m;
  m.q = q;
  m.delta = std::log(static_cast<double>(q));
  m.lattice = true;
  m.mode = CoreMode::None;
  m.rays.push_back(RaySpec{"R1", "v0", q, 1, q});
  return m;
}

QuotientModel make_pure_ray(int q, double delta) {
  QuotientModel m = make_pure_ray(q);
  m.delta = delta;
  m.lattice = false;
  return m;
}

QuotientModel make_star(int q, int k) {
  QuotientModel m;
  m.q = q;
  m.delta = std::log(static_cast<double>(q));
  m.lattice = true;
  m.mode = CoreMode::Point;
  for (int r = 1; r <= k; ++r) m.rays.push_back(RaySpec{"R" + std::to_string(r), "ROOT", q, 1, q});
  return m;
}

double half_log_threshold(int q) { return 0.5 * std::log(static_cast<double>(q)); }

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::BranchingTooSmall: return "BranchingTooSmall";
    case Rule::DeltaTooSmall: return "DeltaTooSmall";
    case Rule::NoRays: return "NoRays";
    case Rule::PureRayCount: return "PureRayCount";
    case Rule::DuplicateRay: return "DuplicateRay";
    case Rule::UnknownVertex: return "UnknownVertex";
    case Rule::UnknownRay: return "UnknownRay";
    case Rule::PointAttachMismatch: return "PointAttachMismatch";
    case Rule::ModeMismatch: return "ModeMismatch";
    case Rule::RayBranchingMismatch: return "RayBranchingMismatch";
    case Rule::NagaoIndexViolation: return "NagaoIndexViolation";
    case Rule::StochasticityViolation: return "StochasticityViolation";
    case Rule::NegativeProbability: return "NegativeProbability";
  }
  return "Unknown";
}

std::vector<Violation> validate_model(const QuotientModel& model) {
  std::vector<Violation> out;
  auto add = [&out](Rule rule, std::string location, std::string detail) {
    out.push_back(Violation{rule, std::move(location), std::move(detail)});
  };

  if (model.q < 2) add(Rule::BranchingTooSmall, "q", "q = " + std::to_string(model.q) + " < 2");
  if (!model.lattice && (!std::isfinite(model.delta) || model.delta <= half_log_threshold(std::max(model.q, 1)))) {
    add(Rule::DeltaTooSmall, "delta",
        "delta = " + format_double(model.delta) + " <= (1/2) ln q = " +
            format_double(half_log_threshold(std::max(model.q, 1))));
  }
  if (model.rays.empty()) add(Rule::NoRays, "rays", "at least one ray is required");
  if (model.mode == CoreMode::None && model.rays.size() > 1) {
    add(Rule::PureRayCount, "compact", "pure-ray mode allows exactly one ray, found " + std::to_string(model.rays.size()));
  }

  std::set<std::string> seen;
  for (const auto& ray : model.rays) {
    if (!seen.insert(ray.id).second) add(Rule::DuplicateRay, "ray " + ray.id, "ray id declared twice");
    if (ray.q != model.q) {
      add(Rule::RayBranchingMismatch, "ray " + ray.id,
          "ray branching " + std::to_string(ray.q) + " differs from q = " + std::to_string(model.q));
    }
    if (ray.up_index != 1) {
      add(Rule::NagaoIndexViolation, "ray " + ray.id + " edge v1->v2",
          "ascending edge has index " + std::to_string(ray.up_index) + ", expected 1");
    }
    if (ray.down_index != model.q) {
      add(Rule::NagaoIndexViolation, "ray " + ray.id + " edge v2->v1",
          "descending edge has index " + std::to_string(ray.down_index) + ", expected q = " + std::to_string(model.q));
    }
  }

  const auto& cs = model.compact;
  std::set<std::string> states(cs.states.begin(), cs.states.end());
  if (model.mode == CoreMode::Matrix) {
    if (states.size() != cs.states.size()) add(Rule::ModeMismatch, "state", "compact state declared twice");
    if (cs.states.empty()) add(Rule::ModeMismatch, "compact", "matrix mode requires at least one state");
    for (const auto& ray : model.rays) {
      if (!states.count(ray.attach)) add(Rule::UnknownVertex, "ray " + ray.id, "attach vertex '" + ray.attach + "' is not a compact state");
    }
  } else {
    if (!cs.states.empty() || !cs.trans.empty() || !cs.entries.empty()) {
      add(Rule::ModeMismatch, "compact", "state/trans/entry directives require 'compact matrix'");
    }
    for (const auto& ray : model.rays) {
      if (ray.attach != model.rays.front().attach) {
        add(Rule::PointAttachMismatch, "ray " + ray.id, "all rays must attach to the single core vertex '" + model.rays.front().attach + "'");
      }
    }
  }

  const auto vertex_known = [&](const std::string& v) {
    if (model.mode == CoreMode::Matrix) return states.count(v) > 0;
    return !model.rays.empty() && v == model.rays.front().attach;
  };

  std::map<std::string, Rational> out_mass;
  std::map<std::string, Rational> entry_mass;
  for (const auto& t : cs.trans) {
    if (!vertex_known(t.from)) add(Rule::UnknownVertex, "trans " + t.from + " " + t.to, "unknown vertex '" + t.from + "'");
    if (!vertex_known(t.to)) add(Rule::UnknownVertex, "trans " + t.from + " " + t.to, "unknown vertex '" + t.to + "'");
    if (t.prob < 0) add(Rule::NegativeProbability, "trans " + t.from + " " + t.to, "negative probability");
    out_mass[t.from] += t.prob;
  }
  for (const auto& x : cs.exits) {
    if (!vertex_known(x.from)) add(Rule::UnknownVertex, "exit " + x.from + " " + x.to, "unknown vertex '" + x.from + "'");
    if (!model.ray_index(x.to)) add(Rule::UnknownRay, "exit " + x.from + " " + x.to, "unknown ray '" + x.to + "'");
    if (x.prob < 0) add(Rule::NegativeProbability, "exit " + x.from + " " + x.to, "negative probability");
    out_mass[x.from] += x.prob;
  }
  for (const auto& e : cs.entries) {
    if (!model.ray_index(e.from)) add(Rule::UnknownRay, "entry " + e.from + " " + e.to, "unknown ray '" + e.from + "'");
    if (!vertex_known(e.to)) add(Rule::UnknownVertex, "entry " + e.from + " " + e.to, "unknown vertex '" + e.to + "'");
    if (e.prob < 0) add(Rule::NegativeProbability, "entry " + e.from + " " + e.to, "negative probability");
    entry_mass[e.from] += e.prob;
  }

  if (model.mode == CoreMode::Matrix) {
    for (const auto& s : cs.states) {
      const Rational total = out_mass.count(s) ? out_mass[s] : Rational(0);
      if (total != 1) {
        add(Rule::StochasticityViolation, "state " + s,
            "outgoing probabilities sum to " + format_rational(total) + " (" + format_double(to_double(total)) + ")");
      }
    }
    for (const auto& ray : model.rays) {
      const Rational total = entry_mass.count(ray.id) ? entry_mass[ray.id] : Rational(0);
      if (total != 1) {
        add(Rule::StochasticityViolation, "entry " + ray.id,
            "entry probabilities sum to " + format_rational(total) + " (" + format_double(to_double(total)) + ")");
      }
    }
  } else if (!cs.exits.empty() && !model.rays.empty()) {
    const auto& point = model.rays.front().attach;
    const Rational total = out_mass.count(point) ? out_mass[point] : Rational(0);
    if (total != 1) {
      add(Rule::StochasticityViolation, "exit " + point,
          "exit probabilities sum to " + format_rational(total) + " (" + format_double(to_double(total)) + ")");
    }
  }
  return out;
}

CompactRouting resolve_compact(const QuotientModel& model) {
  CompactRouting out;
  out.vertices = model.core_vertices();
  const std::size_t n = out.vertices.size();
  const std::size_t k = model.rays.size();
  out.internal = Matrix<Rational>(n, n);
  out.exit = Matrix<Rational>(n, k);
  out.entry = Matrix<Rational>(k, n);

  const auto vidx = [&](const std::string& name) -> std::size_t {
    const auto i = model.core_index(name);
    if (!i) throw Error(ErrorCode::UnknownVertex, "unknown core vertex '" + name + "'");
    return *i;
  };
  const auto ridx = [&](const std::string& id) -> std::size_t {
    const auto r = model.ray_index(id);
    if (!r) throw Error(ErrorCode::UnknownVertex, "unknown ray '" + id + "'");
    return *r;
  };

  if (model.mode == CoreMode::Matrix) {
    for (const auto& t : model.compact.trans) out.internal(vidx(t.from), vidx(t.to)) += t.prob;
    for (const auto& x : model.compact.exits) out.exit(vidx(x.from), ridx(x.to)) += x.prob;
    for (const auto& e : model.compact.entries) out.entry(ridx(e.from), vidx(e.to)) += e.prob;
    for (std::size_t w = 0; w < n; ++w) {
      for (std::size_t v = 0; v < n; ++v) {
        if (out.internal(v, w) > 0) {
          out.occupiable.push_back(static_cast<std::uint32_t>(w));
          break;
        }
      }
    }
  } else if (n == 1) {
    for (std::size_t r = 0; r < k; ++r) out.entry(r, 0) = 1;
    if (model.compact.exits.empty()) {
      for (std::size_t r = 0; r < k; ++r) out.exit(0, r) = Rational(1, static_cast<long long>(k));
    } else {
      for (const auto& x : model.compact.exits) out.exit(0, ridx(x.to)) += x.prob;
    }
  }
  return out;
}

bool is_valid_edge(const QuotientModel& model, const Edge& e) {
  if (e.kind == EdgeKind::Compact) {
    if (model.mode != CoreMode::Matrix) return false;
    const auto routing = resolve_compact(model);
    return std::find(routing.occupiable.begin(), routing.occupiable.end(), e.vertex) != routing.occupiable.end();
  }
  return e.ray < model.rays.size() && e.level >= 1;
}

Vertex terminus(const QuotientModel& model, const Edge& e) {
  switch (e.kind) {
    case EdgeKind::Compact: return Vertex{true, e.vertex, 0};
    case EdgeKind::RayUp: return Vertex{false, e.ray, e.level};
    case EdgeKind::RayDown:
      if (e.level == 1) return Vertex{true, *model.core_index(model.rays.at(e.ray).attach), 0};
      return Vertex{false, e.ray, e.level - 1};
  }
  return {};
}

std::optional<Vertex> origin(const QuotientModel& model, const Edge& e) {
  const auto rev = reverse(e);
  if (!rev) return std::nullopt;
  return terminus(model, *rev);
}

std::optional<Edge> reverse(const Edge& e) {
  switch (e.kind) {
    case EdgeKind::RayUp: return Edge::down(e.ray, e.level);
    case EdgeKind::RayDown: return Edge::up(e.ray, e.level);
    case EdgeKind::Compact: return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// Departure index from the attach vertex: q+1 for a point core (the lone
// vertex of a pure ray), 1 when a full compact core carries the other lifts.
int base_up_index(const QuotientModel& model) { return model.mode == CoreMode::Matrix ? 1 : model.q + 1; }

}  // namespace

int edge_index(const QuotientModel& model, const Edge& e) {
  if (!e.is_ray()) throw Error(ErrorCode::UnknownEdge, "compact symbols carry no index");
  const auto& ray = model.rays.at(e.ray);
  if (e.kind == EdgeKind::RayUp) return e.level == 1 ? base_up_index(model) : ray.up_index;
  return ray.down_index;
}

std::vector<Edge> admissible_successors(const QuotientModel& model, const Edge& e) {
  if (!is_valid_edge(model, e)) throw Error(ErrorCode::UnknownEdge, "edge is not part of the quotient graph");
  std::vector<Edge> out;
  switch (e.kind) {
    case EdgeKind::RayUp:
      out.push_back(Edge::up(e.ray, e.level + 1));
      if (edge_index(model, Edge::down(e.ray, e.level)) > 1) out.push_back(Edge::down(e.ray, e.level));
      return out;
    case EdgeKind::RayDown:
      if (e.level >= 2) {
        out.push_back(Edge::down(e.ray, e.level - 1));
        if (edge_index(model, Edge::up(e.ray, e.level)) > 1) out.push_back(Edge::up(e.ray, e.level));
        return out;
      }
      break;
    case EdgeKind::Compact:
      break;
  }

  // Moves through the core follow the support of the compact routing.
  const auto routing = resolve_compact(model);
  const std::size_t n = routing.vertices.size();
  const std::size_t k = model.rays.size();
  std::vector<Rational> from(n);
  if (e.kind == EdgeKind::Compact) {
    from[e.vertex] = 1;
  } else {
    for (std::size_t v = 0; v < n; ++v) from[v] = routing.entry(e.ray, v);
  }
  for (std::uint32_t w : routing.occupiable) {
    Rational p = 0;
    for (std::size_t v = 0; v < n; ++v) p += from[v] * routing.internal(v, w);
    if (p > 0) out.push_back(Edge::compact(w));
  }
  for (std::size_t r = 0; r < k; ++r) {
    Rational p = 0;
    for (std::size_t v = 0; v < n; ++v) p += from[v] * routing.exit(v, r);
    if (p > 0) out.push_back(Edge::up(static_cast<std::uint32_t>(r), 1));
  }
  return out;
}

std::string edge_name(const QuotientModel& model, const Edge& e) {
  switch (e.kind) {
    case EdgeKind::RayUp: return model.rays.at(e.ray).id + "/u" + std::to_string(e.level);
    case EdgeKind::RayDown: return model.rays.at(e.ray).id + "/d" + std::to_string(e.level);
    case EdgeKind::Compact: return "compact/" + model.core_vertices().at(e.vertex);
  }
  return {};
}

std::uint32_t EdgeIndexedGraph::add_vertex(std::string name) {
  names_.push_back(std::move(name));
  out_.emplace_back();
  return static_cast<std::uint32_t>(names_.size() - 1);
}

std::uint32_t EdgeIndexedGraph::add_edge(std::uint32_t u, std::uint32_t v, int index_uv, int index_vu) {
  if (u >= names_.size() || v >= names_.size()) throw Error(ErrorCode::UnknownVertex, "add_edge: unknown vertex");
  if (index_uv < 1 || index_vu < 1) throw Error(ErrorCode::InvalidArgument, "edge indices must be positive");
  const auto a = static_cast<std::uint32_t>(edges_.size());
  const auto b = a + 1;
  edges_.push_back(OrientedEdge{a, u, v, b});
  edges_.push_back(OrientedEdge{b, v, u, a});
  index_.push_back(index_uv);
  index_.push_back(index_vu);
  out_[u].push_back(a);
  out_[v].push_back(b);
  return a;
}

std::optional<std::uint32_t> EdgeIndexedGraph::find_edge(std::uint32_t u, std::uint32_t v) const {
  for (std::uint32_t id : out_.at(u)) {
    if (edges_[id].terminus == v) return id;
  }
  return std::nullopt;
}

bool EdgeIndexedGraph::connected() const {
  if (names_.empty()) return true;
  std::vector<bool> seen(names_.size(), false);
  std::vector<std::uint32_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (std::uint32_t id : out_[v]) {
      const auto w = edges_[id].terminus;
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == names_.size();
}

std::vector<std::uint32_t> EdgeIndexedGraph::admissible_successors(std::uint32_t e) const {
  const auto& edge = edges_.at(e);
  std::vector<std::uint32_t> out;
  for (std::uint32_t f : out_[edge.terminus]) {
    if (f == edge.reverse && index_[f] <= 1) continue;
    out.push_back(f);
  }
  return out;
}

EdgeIndexedGraph materialize_ray(const QuotientModel& model, std::uint32_t ray, std::uint32_t depth) {
  const auto& spec = model.rays.at(ray);
  EdgeIndexedGraph g;
  g.add_vertex(spec.attach);
  for (std::uint32_t level = 1; level <= depth; ++level) {
    g.add_vertex(spec.id + ".v" + std::to_string(level));
    const int up = level == 1 ? base_up_index(model) : spec.up_index;
    g.add_edge(level - 1, level, up, spec.down_index);
  }
  return g;
}

}  // namespace geoflow
