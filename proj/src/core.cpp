#include "spinesim/core.hpp"

#include <algorithm>
#include <cmath>

namespace spinesim {

namespace {

double slack(double a, double b, double rel_tol) noexcept
{
    return rel_tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

bool Interval::contains(Interval const& inner, double rel_tol) const noexcept
{
    return inner.lo >= lo - slack(inner.lo, lo, rel_tol)
           && inner.hi <= hi + slack(inner.hi, hi, rel_tol);
}

bool Interval::contains(double x, double rel_tol) const noexcept
{
    return x >= lo - slack(x, lo, rel_tol) && x <= hi + slack(x, hi, rel_tol);
}

bool approx_equal(Interval const& a, Interval const& b, double rel_tol) noexcept
{
    return std::fabs(a.lo - b.lo) <= slack(a.lo, b.lo, rel_tol)
           && std::fabs(a.hi - b.hi) <= slack(a.hi, b.hi, rel_tol);
}

Interval make_interval(double lo, double hi)
{
    if (!(lo <= hi))
        throw std::invalid_argument("interval requires lo <= hi");
    return {lo, hi};
}

MarkedTree::MarkedTree(Interval root_mark)
{
    nodes_.push_back(Node{kNoParent, 0, root_mark, 0, 0});
    gen_begin_ = {0};
}

void MarkedTree::begin_generation()
{
    gen_begin_.push_back(static_cast<NodeId>(nodes_.size()));
}

NodeId MarkedTree::add_child(NodeId parent, Interval mark)
{
    check(parent);
    auto const id = static_cast<NodeId>(nodes_.size());
    Node& p = nodes_[parent];
    if (p.generation + 1 != height())
        throw std::logic_error("child must be added to the open generation");
    if (p.child_count == 0)
        p.first_child = id;
    else if (p.first_child + p.child_count != id)
        throw std::logic_error("children of a node must be contiguous");
    ++p.child_count;
    nodes_.push_back(Node{parent, p.generation + 1, mark, 0, 0});
    return id;
}

MarkedTree::Node const& MarkedTree::node(NodeId id) const
{
    check(id);
    return nodes_[id];
}

std::pair<NodeId, NodeId> MarkedTree::generation(std::uint32_t g) const noexcept
{
    if (g >= gen_begin_.size())
        return {static_cast<NodeId>(nodes_.size()), static_cast<NodeId>(nodes_.size())};
    const NodeId end = g + 1 < gen_begin_.size() ? gen_begin_[g + 1]
                                                 : static_cast<NodeId>(nodes_.size());
    return {gen_begin_[g], end};
}

std::size_t MarkedTree::generation_size(std::uint32_t g) const noexcept
{
    auto [b, e] = generation(g);
    return e - b;
}

void MarkedTree::check(NodeId id) const
{
    if (id >= nodes_.size())
        throw std::out_of_range("node out of range");
}

NodeId MarkedTree::mrca(NodeId u, NodeId v) const
{
    check(u);
    check(v);
    while (nodes_[u].generation > nodes_[v].generation)
        u = nodes_[u].parent;
    while (nodes_[v].generation > nodes_[u].generation)
        v = nodes_[v].parent;
    while (u != v)
    {
        u = nodes_[u].parent;
        v = nodes_[v].parent;
    }
    return u;
}

std::uint32_t MarkedTree::tree_distance(NodeId u, NodeId v) const
{
    const NodeId w = mrca(u, v);
    const auto gw = nodes_[w].generation;
    return (nodes_[u].generation - gw) + (nodes_[v].generation - gw);
}

std::uint32_t MarkedTree::genealogical_depth(NodeId u, NodeId v) const
{
    check(u);
    check(v);
    if (nodes_[u].generation != nodes_[v].generation)
        throw std::invalid_argument("genealogical depth needs nodes of one generation");
    return nodes_[u].generation - nodes_[mrca(u, v)].generation;
}

bool MarkedTree::valid(double rel_tol) const
{
    if (nodes_.empty() || nodes_[0].parent != kNoParent || nodes_[0].generation != 0)
        return false;
    std::size_t child_total = 0;
    for (NodeId id = 0; id < nodes_.size(); ++id)
    {
        Node const& n = nodes_[id];
        if (!(n.mark.lo <= n.mark.hi))
            return false;
        if (id != 0)
        {
            if (n.parent == kNoParent || n.parent >= id)
                return false;
            Node const& p = nodes_[n.parent];
            if (p.generation + 1 != n.generation)
                return false;
            if (id < p.first_child || id >= p.first_child + p.child_count)
                return false;
            if (!p.mark.contains(n.mark, rel_tol))
                return false;
        }
        child_total += n.child_count;
    }
    return child_total + 1 == nodes_.size();
}

SquareMatrix SquareMatrix::from_rows(std::vector<std::vector<double>> const& rows)
{
    SquareMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        if (rows[i].size() != rows.size())
            throw std::invalid_argument("matrix is not square");
        for (std::size_t j = 0; j < rows.size(); ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

UltrametricMatrix UltrametricMatrix::permuted(std::span<std::size_t const> perm) const
{
    const std::size_t k = this->k();
    if (perm.size() != k)
        throw std::invalid_argument("permutation size mismatch");
    UltrametricMatrix out;
    out.d = SquareMatrix(k);
    if (chromosomic.dim() == k && k > 0)
        out.chromosomic = SquareMatrix(k);
    out.marks.resize(marks.size());
    for (std::size_t i = 0; i < k; ++i)
    {
        for (std::size_t j = 0; j < k; ++j)
        {
            out.d(i, j) = d(perm[i], perm[j]);
            if (out.chromosomic.dim() == k)
                out.chromosomic(i, j) = chromosomic(perm[i], perm[j]);
        }
        if (marks.size() == k)
            out.marks[i] = marks[perm[i]];
    }
    return out;
}

bool is_ultrametric(SquareMatrix const& m, double tol)
{
    const std::size_t k = m.dim();
    if (m.data().size() != k * k)
        throw std::invalid_argument("matrix is not square");
    for (std::size_t i = 0; i < k; ++i)
    {
        if (std::fabs(m(i, i)) > tol)
            return false;
        for (std::size_t j = i + 1; j < k; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > tol)
                return false;
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l)
                if (m(i, j) > std::max(m(i, l), m(l, j)) + tol)
                    return false;
    return true;
}

}  // namespace spinesim
