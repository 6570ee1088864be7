#pragma once

// Edge-indexed quotient graphs: a compact core with Nagao rays attached.
//
// Ray r has vertices v(r,0), v(r,1), ... where v(r,0) is the attach vertex in
// the core. The ascending edge v(r,i-1) -> v(r,i) is RayUp(r,i) and its
// reverse is RayDown(r,i). Interior indices follow the 1, q, 1, q pattern:
// an ascending edge has index 1 (one lift) and a descending edge index q.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geoflow/numeric.hpp"

namespace geoflow {

enum class EdgeKind : std::uint8_t { RayUp, RayDown, Compact };

/// Oriented quotient edge, which is also a symbol of the coding alphabet and a
/// state of the geodesic-flow chain. Compact symbols stand for "arrived at
/// compact vertex `vertex` through an internal step"; their continuations are
/// given by the compact transition data rather than by indices.
struct Edge {
  EdgeKind kind = EdgeKind::RayUp;
  std::uint32_t ray = 0;
  std::uint32_t level = 0;
  std::uint32_t vertex = 0;

  static constexpr Edge up(std::uint32_t ray, std::uint32_t level) { return {EdgeKind::RayUp, ray, level, 0}; }
  static constexpr Edge down(std::uint32_t ray, std::uint32_t level) { return {EdgeKind::RayDown, ray, level, 0}; }
  static constexpr Edge compact(std::uint32_t vertex) { return {EdgeKind::Compact, 0, 0, vertex}; }

  bool is_ray() const { return kind != EdgeKind::Compact; }

  /// Distance from the core of the terminus vertex.
  std::uint32_t terminus_height() const {
    switch (kind) {
      case EdgeKind::RayUp: return level;
      case EdgeKind::RayDown: return level - 1;
      case EdgeKind::Compact: return 0;
    }
    return 0;
  }

  auto operator<=>(const Edge&) const = default;
};

/// Quotient vertex: a core vertex (level 0) or an interior ray vertex.
struct Vertex {
  bool in_core = true;
  std::uint32_t index = 0;  // core vertex index, or ray index
  std::uint32_t level = 0;

  auto operator<=>(const Vertex&) const = default;
};

struct RaySpec {
  std::string id;
  std::string attach;
  int q = 2;
  int up_index = 1;
  int down_index = 2;

  bool operator==(const RaySpec&) const = default;
};

enum class CoreMode { None, Point, Matrix };

struct Link {
  std::string from;
  std::string to;
  Rational prob;

  bool operator==(const Link&) const = default;
};

/// Compact-core transition data. `exits` link a core vertex to a ray id,
/// `entries` link a ray id to the core vertex where its excursions land.
struct CompactSpec {
  std::vector<std::string> states;
  std::vector<Link> trans;
  std::vector<Link> exits;
  std::vector<Link> entries;

  bool operator==(const CompactSpec&) const = default;
};

struct QuotientModel {
  int q = 2;
  double delta = 0.0;
  /// True when delta was left at its lattice default ln q; enables the exact backend.
  bool lattice = true;
  CoreMode mode = CoreMode::None;
  std::vector<RaySpec> rays;
  CompactSpec compact;

  /// Per-level ascent probability q e^{-2 delta}; exactly 1/q in lattice mode.
  double rho() const;
  /// Throws Error(NotLattice) outside lattice mode.
  Rational exact_rho() const;

  std::vector<std::string> core_vertices() const;
  std::optional<std::uint32_t> ray_index(const std::string& id) const;
  std::optional<std::uint32_t> core_index(const std::string& name) const;

  bool operator==(const QuotientModel&) const = default;
};

/// Builds a lattice-mode model (delta = ln q) consisting of a single Nagao ray.
QuotientModel make_pure_ray(int q);
/// Same, with an explicit critical exponent (non-lattice unless defaulted).
QuotientModel make_pure_ray(int q, double delta);
/// k rays sharing one point core with uniform exits.
QuotientModel make_star(int q, int k);

double half_log_threshold(int q);

enum class Rule {
  BranchingTooSmall,
  DeltaTooSmall,
  NoRays,
  PureRayCount,
  DuplicateRay,
  UnknownVertex,
  UnknownRay,
  PointAttachMismatch,
  ModeMismatch,
  RayBranchingMismatch,
  NagaoIndexViolation,
  StochasticityViolation,
  NegativeProbability,
};

std::string_view to_string(Rule rule);

struct Violation {
  Rule rule;
  std::string location;
  std::string detail;
};

/// Checks every structural invariant; an empty result means the model is valid.
std::vector<Violation> validate_model(const QuotientModel& model);

/// Compact block with names resolved to indices. In none/point mode this is a
/// single vertex with no internal steps and exits given (or uniform).
struct CompactRouting {
  std::vector<std::string> vertices;
  Matrix<Rational> internal;  // vertices x vertices
  Matrix<Rational> exit;      // vertices x rays
  Matrix<Rational> entry;     // rays x vertices
  /// Vertices that can be occupied as Compact chain states (targets of an internal step).
  std::vector<std::uint32_t> occupiable;
};

CompactRouting resolve_compact(const QuotientModel& model);

/// Continuations allowed after `e`. Ray moves follow the index rule: the
/// reversal of `e` is allowed iff index(reverse(e)) > 1. Moves through the core
/// follow the support of the compact routing. Throws Error(UnknownEdge).
std::vector<Edge> admissible_successors(const QuotientModel& model, const Edge& e);

bool is_valid_edge(const QuotientModel& model, const Edge& e);

/// Quotient-graph queries on ray edges. Compact symbols have a terminus only.
Vertex terminus(const QuotientModel& model, const Edge& e);
std::optional<Vertex> origin(const QuotientModel& model, const Edge& e);
std::optional<Edge> reverse(const Edge& e);
/// Index of a ray edge (number of lifts at a lifted origin).
int edge_index(const QuotientModel& model, const Edge& e);

std::string edge_name(const QuotientModel& model, const Edge& e);

/// Finite edge-indexed graph with explicitly stored reverses.
class EdgeIndexedGraph {
 public:
  struct OrientedEdge {
    std::uint32_t id = 0;
    std::uint32_t origin = 0;
    std::uint32_t terminus = 0;
    std::uint32_t reverse = 0;
  };

  std::uint32_t add_vertex(std::string name);
  /// Adds u->v with index `index_uv` and v->u with `index_vu`; returns the id of u->v.
  std::uint32_t add_edge(std::uint32_t u, std::uint32_t v, int index_uv, int index_vu);

  std::size_t vertex_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::string& vertex_name(std::uint32_t v) const { return names_.at(v); }
  const OrientedEdge& edge(std::uint32_t id) const { return edges_.at(id); }
  int index(std::uint32_t id) const { return index_.at(id); }
  const std::vector<std::uint32_t>& out_edges(std::uint32_t v) const { return out_.at(v); }
  std::optional<std::uint32_t> find_edge(std::uint32_t u, std::uint32_t v) const;

  bool connected() const;
  /// Admissible continuations: every edge leaving terminus(e) except the
  /// reversal, which is allowed iff its index exceeds 1.
  std::vector<std::uint32_t> admissible_successors(std::uint32_t e) const;

 private:
  std::vector<std::string> names_;
  std::vector<OrientedEdge> edges_;
  std::vector<int> index_;
  std::vector<std::vector<std::uint32_t>> out_;
};

/// Materializes ray `r` (levels 0..depth, level 0 being its attach vertex) as
/// an edge-indexed graph. Vertex k of the result is v(r,k).
EdgeIndexedGraph materialize_ray(const QuotientModel& model, std::uint32_t ray, std::uint32_t depth);

}  // namespace geoflow
