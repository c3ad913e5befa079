#pragma once

#include "qpg/lattice.hpp"
#include "qpg/numeric.hpp"
#include "qpg/potential.hpp"

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qpg {

using NodeId = uint32_t;
inline constexpr NodeId kZero = 0;
inline constexpr NodeId kOne = 1;

// Leaves depend on xi through xi' = xi + 2*shift:
//   VHat(theta)        Fourier coefficient of V (constant in xi)
//   Phi(theta, shift)  cut-off phi_theta(xi')
//   Chi(theta, shift)  phi_theta(xi') / (4 (xi' + theta) theta), 0 where phi vanishes
//   XiSq(shift)        xi'^2
enum class NodeKind : uint8_t { Zero, One, Const, VHat, Phi, Chi, XiSq, Sum, Prod };

struct Node {
    NodeKind kind = NodeKind::Zero;
    Freq theta;
    Freq shift;
    Cplx<quad> value;                                // Const
    std::vector<std::pair<Cplx<quad>, NodeId>> terms;  // Sum: coefficient * child
    std::vector<NodeId> factors;                     // Prod
};

// Hash-consed expression DAG. Children always have smaller ids than parents.
class ExprPool {
public:
    ExprPool();

    NodeId constant(Cplx<quad> c);
    NodeId vhat(const Freq& theta);
    NodeId phi(const Freq& theta, const Freq& shift = Freq::zero());
    NodeId chi(const Freq& theta, const Freq& shift = Freq::zero());
    NodeId xisq(const Freq& shift = Freq::zero());
    NodeId sum(std::vector<std::pair<Cplx<quad>, NodeId>> terms);
    NodeId prod(std::vector<NodeId> factors);
    NodeId add(NodeId a, NodeId b) { return sum({{Cplx<quad>(1), a}, {Cplx<quad>(1), b}}); }
    NodeId sub(NodeId a, NodeId b) { return sum({{Cplx<quad>(1), a}, {Cplx<quad>(-1), b}}); }
    NodeId scale(Cplx<quad> c, NodeId a) { return sum({{c, a}}); }
    NodeId mul(NodeId a, NodeId b) { return prod({a, b}); }

    // Node evaluated at xi + 2*s.
    NodeId shifted(NodeId n, const Freq& s);

    const Node& node(NodeId id) const { return nodes_[id]; }
    size_t size() const { return nodes_.size(); }

    // Set of (#VHat, #Chi) pairs over the monomials of the expanded node.
    const std::set<std::pair<int, int>>& signature(NodeId id);
    bool contains_xisq(NodeId id);

    std::string to_json(NodeId id, const GeneratorBasis& basis, int max_nodes = 2000) const;

private:
    NodeId intern(Node&& n);
    static size_t node_hash(const Node& n);
    static bool node_equal(const Node& a, const Node& b);

    std::vector<Node> nodes_;
    std::unordered_multimap<size_t, NodeId> index_;
    std::unordered_map<uint64_t, NodeId> shift_memo_;
    FreqMap<uint32_t> shift_ids_;
    std::vector<Freq> shift_list_;
    std::unordered_map<NodeId, std::set<std::pair<int, int>>> sig_;
    std::unordered_map<NodeId, bool> xisq_;
};

// Symbol homogeneous in epsilon: frequency -> coefficient function.
using HomSymbol = std::map<Freq, NodeId>;

// epsilon power -> homogeneous part
struct GradedSymbol {
    std::map<int, HomSymbol> terms;
};

HomSymbol compose(ExprPool& pool, const HomSymbol& a, const HomSymbol& b);
// i (AB - BA)
HomSymbol ad(ExprPool& pool, const HomSymbol& a, const HomSymbol& b);
// i ((xi+2 theta)^2 - xi^2) psi(xi, theta): commutator with -d^2/dx^2
HomSymbol ad_h0(ExprPool& pool, const HomSymbol& psi);
// coefficient at theta multiplied by phi_theta; theta = 0 drops (phi_0 = 0)
HomSymbol natural_projection(ExprPool& pool, const HomSymbol& a);
// coefficient at theta multiplied by (1 - phi_theta); theta = 0 kept
HomSymbol off_natural(ExprPool& pool, const HomSymbol& a);
// psi_hat = i a_hat chi_theta: solves ad(H0; Psi) + a^natural = 0
HomSymbol solve_commutator(ExprPool& pool, const HomSymbol& a);
HomSymbol add(ExprPool& pool, const HomSymbol& a, const HomSymbol& b, Cplx<quad> cb = Cplx<quad>(1));
HomSymbol scale(ExprPool& pool, const HomSymbol& a, Cplx<quad> c);
HomSymbol potential_symbol(ExprPool& pool, const PotentialSpec& V);
HomSymbol h0_symbol(ExprPool& pool);

GradedSymbol compose(ExprPool& pool, const GradedSymbol& a, const GradedSymbol& b);
GradedSymbol ad(ExprPool& pool, const GradedSymbol& a, const GradedSymbol& b);
GradedSymbol natural_projection(ExprPool& pool, const GradedSymbol& a);

enum class Mollifier : uint8_t { exp1 = 0, exp2 = 1 };

// psi(t) = 1 for |t| <= 1/4, 0 for |t| >= 1/2, phi = 1 - psi.
// exp1: smooth step built from e^{-1/u}; exp2: from e^{-1/u^2}.
template <class T>
T mollifier_phi(T t, Mollifier m);

template <class T>
struct CutoffFamily {
    T width = T(0.1);  // delta (quasi-periodic) or eps_n^{1/2} (dyadic windows)
    Mollifier mollifier = Mollifier::exp1;

    // Zone R(theta): half-width width/(4|theta|) around -theta.
    T half_width(T theta) const {
        using std::abs;
        return width / (4 * abs(theta));
    }
    T phi(T theta, T xi) const {
        using std::abs;
        if (theta == 0) return T(0);
        return mollifier_phi<T>((xi + theta) * 4 * abs(theta) / width, mollifier);
    }
    T chi(T theta, T xi) const {
        if (theta == 0) return T(0);
        const T p = phi(theta, xi);
        if (p == 0) return T(0);
        return p / (4 * (xi + theta) * theta);
    }
};

// Flat evaluation program for a set of roots.
template <class T>
class Program {
public:
    Program() = default;
    Program(const ExprPool& pool, const std::vector<NodeId>& roots, const PotentialSpec& V);

    void set_cutoffs(const CutoffFamily<T>& c) { cut_ = c; }
    const CutoffFamily<T>& cutoffs() const { return cut_; }
    // Rebinds VHat leaves to another potential with the same support layout.
    void rebind(const PotentialSpec& V);

    // Evaluates all roots at xi; out has one value per root.
    void eval(T xi, std::vector<Cplx<T>>& out) const;
    std::vector<Cplx<T>> eval(T xi) const {
        std::vector<Cplx<T>> out;
        eval(xi, out);
        return out;
    }
    size_t size() const { return ops_.size(); }
    size_t num_roots() const { return roots_.size(); }

private:
    struct Op {
        NodeKind kind;
        uint32_t a = 0, b = 0;  // term/factor range, or leaf slot
    };
    struct CutLeaf {
        T theta, shift2;  // theta value, 2*shift value
    };

    std::vector<Op> ops_;
    std::vector<Cplx<T>> consts_;
    std::vector<Freq> vhat_freqs_;
    std::vector<Cplx<T>> vhat_;
    std::vector<CutLeaf> cut_leaves_;
    std::vector<T> xisq_shift2_;
    std::vector<std::pair<uint32_t, uint32_t>> terms_;  // (const index, op index)
    std::vector<uint32_t> factors_;
    std::vector<uint32_t> roots_;
    CutoffFamily<T> cut_;
};

// sup over a grid of |coefficient| summed over the listed coefficient functions.
struct SupGrid {
    double lo = -4, hi = 4;
    int per_unit = 4096;
    std::vector<double> extra;  // zone endpoints etc.
};

double symbol_norm(const Program<double>& prog, const SupGrid& grid);

}  // namespace qpg
