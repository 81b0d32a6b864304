#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "accumulator.hpp"
#include "core.hpp"
#include "functional.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace spinesim {

/*!
 * Coalescent point process encoding of a planar ultrametric tree: the branch
 * times g_i = |l_i ^ l_{i+1}| between consecutive leaves, measured from the
 * root, for a tree of height `height` (N in the discrete case).
 */
struct CppEncoding
{
    double height = 0;
    std::vector<double> times;

    [[nodiscard]] std::size_t leaves() const noexcept { return times.size() + 1; }
};

//! depth(i, j) = height - min(g_i, ..., g_{j-1}) for i < j; zero diagonal.
UltrametricMatrix phi_decode(CppEncoding const& enc);

//! Inverse of phi_decode: g_i = N - depth(i, i+1). Throws on non-ultrametric or non-CPP input.
CppEncoding phi_encode(UltrametricMatrix const& m, std::uint32_t N);

/*!
 * Internal vertices of the CPP tree with more than one child, derived from
 * ties among the branch times: gaps i < j with g_i = g_j share a vertex iff
 * no gap between them is earlier.
 */
struct BranchPoint
{
    double time = 0;             // generation of the vertex
    std::uint32_t degree = 0;    // number of children within the k-leaf tree
    std::uint32_t first_leaf = 0;  // leftmost leaf below the vertex (0-based)
};

std::vector<BranchPoint> branch_points(std::span<double const> times);

/*!
 * Distance matrix of k leaves of the Brownian CPP: H_i i.i.d. uniform on
 * (0,1), H_{ij} = max(H_i..H_{j-1}), then an independent uniform relabeling
 * of the leaves (skipped when `permute` is false).
 */
UltrametricMatrix sample_brownian_cpp_distances(std::uint32_t k, Rng& rng, bool permute = true);

//! Uniformly random permutation of {0, ..., k-1}.
std::vector<std::size_t> random_permutation(std::size_t k, Rng& rng);

/*!
 * CPP intensity measure described by its tail x -> nu((x, inf)), which must
 * be positive and decreasing on (0, x0]. `inverse_cdf`, when given, maps u to
 * the x with nu((x0,inf)) / nu((x,inf)) = u; otherwise bisection is used.
 */
struct CppMeasure
{
    std::function<double(double)> tail;
    std::function<double(double, double)> inverse_cdf;  // (u, x0) -> x

    static CppMeasure brownian();  // nu(dx) = x^-2 dx
};

//! Draw of H with CDF theta / nu((x, inf)) on [0, x0].
double sample_cpp_depth(CppMeasure const& measure, double x0, double theta, Rng& rng);

struct CppPolynomial
{
    Accumulator phi;         // raw phi values
    double prefactor = 1.0;  // k! / theta^k
    [[nodiscard]] Estimate estimate() const { return Estimate::from(phi, prefactor); }
};

/*!
 * Monte Carlo value of the degree-k polynomial of the CPP tree at height x0:
 * k!/theta^k E[phi(H_{sigma_i, sigma_j})], theta = nu((x0, inf)).
 */
CppPolynomial cpp_polynomial(CppMeasure const& measure, double x0, std::uint32_t k,
                             TestFunctional const& phi, std::size_t replicates,
                             RunContext const& ctx, bool permute = true);

}  // namespace spinesim
