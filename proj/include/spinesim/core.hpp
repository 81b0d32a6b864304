#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace spinesim {

//! Closed interval [lo, hi] of chromosome coordinates; the mark of an individual.
struct Interval
{
    double lo = 0;
    double hi = 0;

    [[nodiscard]] constexpr double length() const noexcept { return hi - lo; }

    //! Tolerance-based containment (relative to the larger magnitude).
    [[nodiscard]] bool contains(Interval const& inner, double rel_tol = 1e-9) const noexcept;
    [[nodiscard]] bool contains(double x, double rel_tol = 1e-9) const noexcept;

    friend constexpr bool operator==(Interval const&, Interval const&) = default;
};

//! Tolerance equality; the default for comparing marks.
bool approx_equal(Interval const& a, Interval const& b, double rel_tol = 1e-9) noexcept;

Interval make_interval(double lo, double hi);

using NodeId = std::uint32_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

/*!
 * Rooted planar tree in Ulam-Harris order, stored as a flat array.
 *
 * Nodes are appended generation by generation; the children of a node are a
 * contiguous index range, and each generation is itself contiguous. Node 0 is
 * the root.
 */
class MarkedTree
{
  public:
    struct Node
    {
        NodeId parent = kNoParent;
        std::uint32_t generation = 0;
        Interval mark;
        NodeId first_child = 0;
        std::uint32_t child_count = 0;
    };

    MarkedTree() = default;
    explicit MarkedTree(Interval root_mark);

    //! Opens a new generation; children added afterwards belong to it.
    void begin_generation();
    //! Appends a child of `parent` (which must be in the previous generation).
    NodeId add_child(NodeId parent, Interval mark);

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] Node const& node(NodeId id) const;
    [[nodiscard]] std::span<Node const> nodes() const noexcept { return nodes_; }

    //! Index of the last generation present (0 for a lone root).
    [[nodiscard]] std::uint32_t height() const noexcept
    {
        return static_cast<std::uint32_t>(gen_begin_.size() - 1);
    }
    //! [begin, end) node ids of generation g; empty range when g > height().
    [[nodiscard]] std::pair<NodeId, NodeId> generation(std::uint32_t g) const noexcept;
    [[nodiscard]] std::size_t generation_size(std::uint32_t g) const noexcept;

    [[nodiscard]] NodeId mrca(NodeId u, NodeId v) const;
    //! Graph distance |u -> u^v| + |v -> u^v|.
    [[nodiscard]] std::uint32_t tree_distance(NodeId u, NodeId v) const;
    //! Generations back to the MRCA of two nodes of the same generation.
    [[nodiscard]] std::uint32_t genealogical_depth(NodeId u, NodeId v) const;

    //! Structural validation: parent/generation/child-range/mark-nesting invariants.
    [[nodiscard]] bool valid(double rel_tol = 1e-9) const;

  private:
    void check(NodeId id) const;

    std::vector<Node> nodes_;
    std::vector<NodeId> gen_begin_;
};

//! Dense k x k matrix, row-major.
class SquareMatrix
{
  public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t k, double fill = 0.0) : k_(k), data_(k * k, fill) {}

    [[nodiscard]] std::size_t dim() const noexcept { return k_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * k_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * k_ + j]; }
    [[nodiscard]] std::span<double const> data() const noexcept { return data_; }

    //! Builds from nested rows; throws if not square.
    static SquareMatrix from_rows(std::vector<std::vector<double>> const& rows);

    friend bool operator==(SquareMatrix const&, SquareMatrix const&) = default;

  private:
    std::size_t k_ = 0;
    std::vector<double> data_;
};

/*!
 * Pairwise genealogical distances of k sampled individuals with their marks
 * (interval lengths); optionally the chromosomic distances as well.
 */
struct UltrametricMatrix
{
    SquareMatrix d;
    SquareMatrix chromosomic;  // empty (dim 0) when absent
    std::vector<double> marks;

    [[nodiscard]] std::size_t k() const noexcept { return d.dim(); }

    //! Relabels leaves: entry (i, j) of the result is entry (perm[i], perm[j]).
    [[nodiscard]] UltrametricMatrix permuted(std::span<std::size_t const> perm) const;
};

/*!
 * Strong triangle inequality d(i,j) <= max(d(i,l), d(l,j)) for all triples,
 * up to `tol`. Also requires symmetry within tol.
 */
bool is_ultrametric(SquareMatrix const& m, double tol);

}  // namespace spinesim
