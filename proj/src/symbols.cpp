#include "qpg/symbols.hpp"

#include "qpg/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstring>
#include <functional>

namespace qpg {

namespace {

uint64_t mix(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

uint64_t quad_bits(const quad& q) {
    __float128 x = q.backend().value();
    uint64_t w[2];
    std::memcpy(w, &x, 16);
    return w[0] ^ (w[1] * 0x100000001b3ull);
}

uint64_t freq_bits(const Freq& f) { return FreqHash{}(f); }

bool is_zero_c(const Cplx<quad>& c) { return c.re == 0 && c.im == 0; }
bool is_one_c(const Cplx<quad>& c) { return c.re == 1 && c.im == 0; }

}  // namespace

ExprPool::ExprPool() {
    Node z;
    z.kind = NodeKind::Zero;
    intern(std::move(z));
    Node o;
    o.kind = NodeKind::One;
    intern(std::move(o));
}

size_t ExprPool::node_hash(const Node& n) {
    uint64_t h = static_cast<uint64_t>(n.kind) + 1;
    h = mix(h, freq_bits(n.theta));
    h = mix(h, freq_bits(n.shift));
    h = mix(h, quad_bits(n.value.re));
    h = mix(h, quad_bits(n.value.im));
    for (const auto& [c, id] : n.terms) {
        h = mix(h, quad_bits(c.re));
        h = mix(h, quad_bits(c.im));
        h = mix(h, id);
    }
    for (auto id : n.factors) h = mix(h, id + 0x51ull);
    return static_cast<size_t>(h);
}

bool ExprPool::node_equal(const Node& a, const Node& b) {
    return a.kind == b.kind && a.theta == b.theta && a.shift == b.shift && a.value == b.value &&
           a.terms == b.terms && a.factors == b.factors;
}

NodeId ExprPool::intern(Node&& n) {
    const size_t h = node_hash(n);
    auto range = index_.equal_range(h);
    for (auto it = range.first; it != range.second; ++it)
        if (node_equal(nodes_[it->second], n)) return it->second;
    const NodeId id = static_cast<NodeId>(nodes_.size());
    require(nodes_.size() < 0xffffff00u, ErrorCode::capacity, "expression pool exhausted");
    nodes_.push_back(std::move(n));
    index_.emplace(h, id);
    return id;
}

NodeId ExprPool::constant(Cplx<quad> c) {
    if (is_zero_c(c)) return kZero;
    if (is_one_c(c)) return kOne;
    Node n;
    n.kind = NodeKind::Const;
    n.value = c;
    return intern(std::move(n));
}

NodeId ExprPool::vhat(const Freq& theta) {
    Node n;
    n.kind = NodeKind::VHat;
    n.theta = theta;
    return intern(std::move(n));
}

NodeId ExprPool::phi(const Freq& theta, const Freq& shift) {
    if (theta.is_zero()) return kZero;
    Node n;
    n.kind = NodeKind::Phi;
    n.theta = theta;
    n.shift = shift;
    return intern(std::move(n));
}

NodeId ExprPool::chi(const Freq& theta, const Freq& shift) {
    if (theta.is_zero()) return kZero;
    Node n;
    n.kind = NodeKind::Chi;
    n.theta = theta;
    n.shift = shift;
    return intern(std::move(n));
}

NodeId ExprPool::xisq(const Freq& shift) {
    Node n;
    n.kind = NodeKind::XiSq;
    n.shift = shift;
    return intern(std::move(n));
}

NodeId ExprPool::sum(std::vector<std::pair<Cplx<quad>, NodeId>> terms) {
    std::vector<std::pair<Cplx<quad>, NodeId>> flat;
    flat.reserve(terms.size());
    Cplx<quad> konst;
    for (const auto& [c, id] : terms) {
        if (id == kZero || is_zero_c(c)) continue;
        const Node& n = nodes_[id];
        if (n.kind == NodeKind::One) {
            konst += c;
        } else if (n.kind == NodeKind::Const) {
            konst += c * n.value;
        } else if (n.kind == NodeKind::Sum && n.terms.size() == 1) {
            flat.emplace_back(c * n.terms[0].first, n.terms[0].second);
        } else {
            flat.emplace_back(c, id);
        }
    }
    if (!is_zero_c(konst)) flat.emplace_back(konst, kOne);
    std::sort(flat.begin(), flat.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    std::vector<std::pair<Cplx<quad>, NodeId>> merged;
    for (const auto& t : flat) {
        if (!merged.empty() && merged.back().second == t.second)
            merged.back().first += t.first;
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const auto& t) { return is_zero_c(t.first); }),
                 merged.end());
    if (merged.empty()) return kZero;
    if (merged.size() == 1) {
        if (merged[0].second == kOne) return constant(merged[0].first);
        if (is_one_c(merged[0].first)) return merged[0].second;
    }
    Node n;
    n.kind = NodeKind::Sum;
    n.terms = std::move(merged);
    return intern(std::move(n));
}

NodeId ExprPool::prod(std::vector<NodeId> factors) {
    Cplx<quad> scalar(1);
    std::vector<NodeId> flat;
    std::function<void(NodeId)> push = [&](NodeId id) {
        const Node& n = nodes_[id];
        switch (n.kind) {
            case NodeKind::Zero: scalar = Cplx<quad>(0); break;
            case NodeKind::One: break;
            case NodeKind::Const: scalar *= n.value; break;
            case NodeKind::Prod:
                for (auto f : n.factors) flat.push_back(f);
                break;
            case NodeKind::Sum:
                if (n.terms.size() == 1) {
                    scalar *= n.terms[0].first;
                    push(n.terms[0].second);
                } else {
                    flat.push_back(id);
                }
                break;
            default: flat.push_back(id);
        }
    };
    for (auto id : factors) push(id);
    if (is_zero_c(scalar)) return kZero;
    std::sort(flat.begin(), flat.end());
    NodeId core;
    if (flat.empty()) return constant(scalar);
    if (flat.size() == 1) {
        core = flat[0];
    } else {
        Node n;
        n.kind = NodeKind::Prod;
        n.factors = std::move(flat);
        core = intern(std::move(n));
    }
    if (is_one_c(scalar)) return core;
    Node s;
    s.kind = NodeKind::Sum;
    s.terms = {{scalar, core}};
    return intern(std::move(s));
}

NodeId ExprPool::shifted(NodeId id, const Freq& s) {
    if (s.is_zero()) return id;
    const Node& n0 = nodes_[id];
    switch (n0.kind) {
        case NodeKind::Zero:
        case NodeKind::One:
        case NodeKind::Const:
        case NodeKind::VHat: return id;
        default: break;
    }
    auto sit = shift_ids_.find(s);
    uint32_t sid;
    if (sit == shift_ids_.end()) {
        sid = static_cast<uint32_t>(shift_list_.size());
        shift_ids_.emplace(s, sid);
        shift_list_.push_back(s);
    } else {
        sid = sit->second;
    }
    const uint64_t key = (static_cast<uint64_t>(id) << 32) | sid;
    auto mit = shift_memo_.find(key);
    if (mit != shift_memo_.end()) return mit->second;

    NodeId out;
    const NodeKind kind = n0.kind;
    if (kind == NodeKind::Phi) {
        out = phi(n0.theta, n0.shift + s);
    } else if (kind == NodeKind::Chi) {
        out = chi(n0.theta, n0.shift + s);
    } else if (kind == NodeKind::XiSq) {
        out = xisq(n0.shift + s);
    } else if (kind == NodeKind::Sum) {
        auto terms = n0.terms;
        for (auto& t : terms) t.second = shifted(t.second, s);
        out = sum(std::move(terms));
    } else {
        auto fs = n0.factors;
        for (auto& f : fs) f = shifted(f, s);
        out = prod(std::move(fs));
    }
    shift_memo_.emplace(key, out);
    return out;
}

const std::set<std::pair<int, int>>& ExprPool::signature(NodeId id) {
    auto it = sig_.find(id);
    if (it != sig_.end()) return it->second;
    std::set<std::pair<int, int>> s;
    const Node n = nodes_[id];
    switch (n.kind) {
        case NodeKind::Zero: break;
        case NodeKind::One:
        case NodeKind::Const:
        case NodeKind::Phi:
        case NodeKind::XiSq: s.insert({0, 0}); break;
        case NodeKind::VHat: s.insert({1, 0}); break;
        case NodeKind::Chi: s.insert({0, 1}); break;
        case NodeKind::Sum:
            for (const auto& t : n.terms) {
                const auto& c = signature(t.second);
                s.insert(c.begin(), c.end());
            }
            break;
        case NodeKind::Prod: {
            s.insert({0, 0});
            for (auto f : n.factors) {
                const auto c = signature(f);
                std::set<std::pair<int, int>> next;
                for (const auto& a : s)
                    for (const auto& b : c) next.insert({a.first + b.first, a.second + b.second});
                s = std::move(next);
            }
            break;
        }
    }
    return sig_.emplace(id, std::move(s)).first->second;
}

bool ExprPool::contains_xisq(NodeId id) {
    auto it = xisq_.find(id);
    if (it != xisq_.end()) return it->second;
    const Node n = nodes_[id];
    bool r = n.kind == NodeKind::XiSq;
    for (const auto& t : n.terms) r = r || contains_xisq(t.second);
    for (auto f : n.factors) r = r || contains_xisq(f);
    xisq_[id] = r;
    return r;
}

std::string ExprPool::to_json(NodeId root, const GeneratorBasis& basis, int max_nodes) const {
    using nlohmann::json;
    auto fj = [&](const Freq& f) {
        json a = json::array();
        for (int i = 0; i < basis.dim(); ++i) a.push_back(f.c[i]);
        return a;
    };
    auto cj = [](const Cplx<quad>& c) {
        return json::array({static_cast<double>(c.re), static_cast<double>(c.im)});
    };
    std::vector<NodeId> order;
    std::set<NodeId> seen;
    std::vector<NodeId> stack{root};
    while (!stack.empty() && static_cast<int>(order.size()) < max_nodes) {
        NodeId id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) continue;
        order.push_back(id);
        for (const auto& t : nodes_[id].terms) stack.push_back(t.second);
        for (auto f : nodes_[id].factors) stack.push_back(f);
    }
    static const char* names[] = {"zero", "one", "const", "vhat", "phi", "chi", "xisq", "sum", "prod"};
    json nodes = json::array();
    std::sort(order.begin(), order.end());
    for (auto id : order) {
        const Node& n = nodes_[id];
        json j{{"id", id}, {"kind", names[static_cast<int>(n.kind)]}};
        switch (n.kind) {
            case NodeKind::Const: j["value"] = cj(n.value); break;
            case NodeKind::VHat: j["theta"] = fj(n.theta); break;
            case NodeKind::Phi:
            case NodeKind::Chi:
                j["theta"] = fj(n.theta);
                j["shift"] = fj(n.shift);
                break;
            case NodeKind::XiSq: j["shift"] = fj(n.shift); break;
            case NodeKind::Sum: {
                json ts = json::array();
                for (const auto& [c, ch] : n.terms) ts.push_back({{"coef", cj(c)}, {"child", ch}});
                j["terms"] = ts;
                break;
            }
            case NodeKind::Prod: j["factors"] = n.factors; break;
            default: break;
        }
        nodes.push_back(j);
    }
    json out{{"root", root}, {"nodes", nodes}, {"truncated", seen.size() < nodes_.size() && !stack.empty()}};
    return out.dump();
}

// ---------------------------------------------------------------------------
// symbol algebra

HomSymbol compose(ExprPool& pool, const HomSymbol& a, const HomSymbol& b) {
    std::map<Freq, std::vector<std::pair<Cplx<quad>, NodeId>>> acc;
    for (const auto& [th, bn] : b)
        for (const auto& [ph, an] : a) acc[th + ph].emplace_back(Cplx<quad>(1), pool.mul(pool.shifted(an, th), bn));
    HomSymbol out;
    for (auto& [eta, terms] : acc) {
        NodeId n = pool.sum(std::move(terms));
        if (n != kZero) out[eta] = n;
    }
    return out;
}

HomSymbol ad(ExprPool& pool, const HomSymbol& a, const HomSymbol& b) {
    const Cplx<quad> I(0, 1), mI(0, -1);
    std::map<Freq, std::vector<std::pair<Cplx<quad>, NodeId>>> acc;
    for (const auto& [th, bn] : b)
        for (const auto& [ph, an] : a) {
            acc[th + ph].emplace_back(I, pool.mul(pool.shifted(an, th), bn));
            acc[th + ph].emplace_back(mI, pool.mul(pool.shifted(bn, ph), an));
        }
    HomSymbol out;
    for (auto& [eta, terms] : acc) {
        NodeId n = pool.sum(std::move(terms));
        if (n != kZero) out[eta] = n;
    }
    return out;
}

HomSymbol ad_h0(ExprPool& pool, const HomSymbol& psi) {
    HomSymbol out;
    const NodeId x0 = pool.xisq();
    for (const auto& [th, n] : psi) {
        NodeId d = pool.sub(pool.xisq(th), x0);
        NodeId r = pool.scale(Cplx<quad>(0, 1), pool.mul(d, n));
        if (r != kZero) out[th] = r;
    }
    return out;
}

HomSymbol natural_projection(ExprPool& pool, const HomSymbol& a) {
    HomSymbol out;
    for (const auto& [th, n] : a) {
        if (th.is_zero()) continue;
        NodeId r = pool.mul(n, pool.phi(th));
        if (r != kZero) out[th] = r;
    }
    return out;
}

HomSymbol off_natural(ExprPool& pool, const HomSymbol& a) {
    HomSymbol out;
    for (const auto& [th, n] : a) {
        NodeId r = th.is_zero() ? n : pool.sub(n, pool.mul(n, pool.phi(th)));
        if (r != kZero) out[th] = r;
    }
    return out;
}

HomSymbol solve_commutator(ExprPool& pool, const HomSymbol& a) {
    HomSymbol out;
    for (const auto& [th, n] : a) {
        if (th.is_zero()) continue;
        NodeId r = pool.scale(Cplx<quad>(0, 1), pool.mul(n, pool.chi(th)));
        if (r != kZero) out[th] = r;
    }
    return out;
}

HomSymbol add(ExprPool& pool, const HomSymbol& a, const HomSymbol& b, Cplx<quad> cb) {
    HomSymbol out = a;
    for (const auto& [th, n] : b) {
        auto it = out.find(th);
        NodeId r = it == out.end() ? pool.scale(cb, n) : pool.sum({{Cplx<quad>(1), it->second}, {cb, n}});
        if (r == kZero)
            out.erase(th);
        else
            out[th] = r;
    }
    return out;
}

HomSymbol scale(ExprPool& pool, const HomSymbol& a, Cplx<quad> c) {
    HomSymbol out;
    for (const auto& [th, n] : a) {
        NodeId r = pool.scale(c, n);
        if (r != kZero) out[th] = r;
    }
    return out;
}

HomSymbol potential_symbol(ExprPool& pool, const PotentialSpec& V) {
    HomSymbol out;
    if (V.tau() != 0) out[Freq::zero()] = pool.vhat(Freq::zero());
    for (const auto& f : V.support()) out[f] = pool.vhat(f);
    return out;
}

HomSymbol h0_symbol(ExprPool& pool) { return {{Freq::zero(), pool.xisq()}}; }

GradedSymbol compose(ExprPool& pool, const GradedSymbol& a, const GradedSymbol& b) {
    GradedSymbol out;
    for (const auto& [p, A] : a.terms)
        for (const auto& [q, B] : b.terms) out.terms[p + q] = add(pool, out.terms[p + q], compose(pool, A, B));
    return out;
}

GradedSymbol ad(ExprPool& pool, const GradedSymbol& a, const GradedSymbol& b) {
    GradedSymbol out;
    for (const auto& [p, A] : a.terms)
        for (const auto& [q, B] : b.terms) out.terms[p + q] = add(pool, out.terms[p + q], ad(pool, A, B));
    return out;
}

GradedSymbol natural_projection(ExprPool& pool, const GradedSymbol& a) {
    GradedSymbol out;
    for (const auto& [p, A] : a.terms) out.terms[p] = natural_projection(pool, A);
    return out;
}

// ---------------------------------------------------------------------------
// cut-offs

template <class T>
T mollifier_phi(T t, Mollifier m) {
    using std::abs;
    using std::exp;
    const T at = abs(t);
    if (at >= T(0.5)) return T(1);
    if (at <= T(0.25)) return T(0);
    // u runs from 0 (|t| = 1/2) to 1 (|t| = 1/4); psi = S(u), phi = 1 - S(u).
    const T u = (T(0.5) - at) * 4;
    const T v = 1 - u;
    T fu, fv;
    if (m == Mollifier::exp1) {
        fu = exp(-1 / u);
        fv = exp(-1 / v);
    } else {
        fu = exp(-1 / (u * u));
        fv = exp(-1 / (v * v));
    }
    return fv / (fu + fv);
}

template double mollifier_phi<double>(double, Mollifier);
template quad mollifier_phi<quad>(quad, Mollifier);

// ---------------------------------------------------------------------------
// programs

template <class T>
Program<T>::Program(const ExprPool& pool, const std::vector<NodeId>& roots, const PotentialSpec& V) {
    std::vector<char> live(pool.size(), 0);
    std::vector<NodeId> stack(roots.begin(), roots.end());
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (live[id]) continue;
        live[id] = 1;
        for (const auto& t : pool.node(id).terms) stack.push_back(t.second);
        for (auto f : pool.node(id).factors) stack.push_back(f);
    }
    std::vector<uint32_t> slot(pool.size(), 0);
    FreqMap<uint32_t> vhat_slot;
    std::map<std::pair<Freq, Freq>, uint32_t> cut_slot;
    FreqMap<uint32_t> xisq_slot;
    const auto& basis = *V.basis();
    for (NodeId id = 0; id < pool.size(); ++id) {
        if (!live[id]) continue;
        const Node& n = pool.node(id);
        Op op{n.kind};
        switch (n.kind) {
            case NodeKind::Zero:
            case NodeKind::One: break;
            case NodeKind::Const:
                op.a = static_cast<uint32_t>(consts_.size());
                consts_.push_back(Cplx<T>(n.value));
                break;
            case NodeKind::VHat: {
                auto [it, fresh] = vhat_slot.emplace(n.theta, static_cast<uint32_t>(vhat_freqs_.size()));
                if (fresh) vhat_freqs_.push_back(n.theta);
                op.a = it->second;
                break;
            }
            case NodeKind::Phi:
            case NodeKind::Chi: {
                auto [it, fresh] = cut_slot.emplace(std::make_pair(n.theta, n.shift),
                                                    static_cast<uint32_t>(cut_leaves_.size()));
                if (fresh)
                    cut_leaves_.push_back({basis.value<T>(n.theta), 2 * basis.value<T>(n.shift)});
                op.a = it->second;
                break;
            }
            case NodeKind::XiSq: {
                auto [it, fresh] = xisq_slot.emplace(n.shift, static_cast<uint32_t>(xisq_shift2_.size()));
                if (fresh) xisq_shift2_.push_back(2 * basis.value<T>(n.shift));
                op.a = it->second;
                break;
            }
            case NodeKind::Sum:
                op.a = static_cast<uint32_t>(terms_.size());
                for (const auto& [c, ch] : n.terms) {
                    terms_.emplace_back(static_cast<uint32_t>(consts_.size()), slot[ch]);
                    consts_.push_back(Cplx<T>(c));
                }
                op.b = static_cast<uint32_t>(terms_.size());
                break;
            case NodeKind::Prod:
                op.a = static_cast<uint32_t>(factors_.size());
                for (auto f : n.factors) factors_.push_back(slot[f]);
                op.b = static_cast<uint32_t>(factors_.size());
                break;
        }
        slot[id] = static_cast<uint32_t>(ops_.size());
        ops_.push_back(op);
    }
    for (auto r : roots) roots_.push_back(slot[r]);
    rebind(V);
}

template <class T>
void Program<T>::rebind(const PotentialSpec& V) {
    vhat_.clear();
    for (const auto& f : vhat_freqs_) vhat_.push_back(Cplx<T>(V.coef(f)));
}

template <class T>
void Program<T>::eval(T xi, std::vector<Cplx<T>>& out) const {
    thread_local std::vector<Cplx<T>> vals_;
    thread_local std::vector<T> phis_;
    vals_.resize(ops_.size());
    phis_.resize(cut_leaves_.size());
    for (size_t k = 0; k < cut_leaves_.size(); ++k)
        phis_[k] = cut_.phi(cut_leaves_[k].theta, xi + cut_leaves_[k].shift2);
    for (size_t k = 0; k < ops_.size(); ++k) {
        const Op& op = ops_[k];
        Cplx<T>& v = vals_[k];
        switch (op.kind) {
            case NodeKind::Zero: v = Cplx<T>(); break;
            case NodeKind::One: v = Cplx<T>(T(1)); break;
            case NodeKind::Const: v = consts_[op.a]; break;
            case NodeKind::VHat: v = vhat_[op.a]; break;
            case NodeKind::Phi: v = Cplx<T>(phis_[op.a]); break;
            case NodeKind::Chi: {
                const T p = phis_[op.a];
                if (p == 0) {
                    v = Cplx<T>();
                } else {
                    const auto& L = cut_leaves_[op.a];
                    v = Cplx<T>(p / (4 * (xi + L.shift2 + L.theta) * L.theta));
                }
                break;
            }
            case NodeKind::XiSq: {
                const T x = xi + xisq_shift2_[op.a];
                v = Cplx<T>(x * x);
                break;
            }
            case NodeKind::Sum: {
                Cplx<T> s;
                for (uint32_t t = op.a; t < op.b; ++t) s += consts_[terms_[t].first] * vals_[terms_[t].second];
                v = s;
                break;
            }
            case NodeKind::Prod: {
                Cplx<T> s = vals_[factors_[op.a]];
                for (uint32_t t = op.a + 1; t < op.b; ++t) s *= vals_[factors_[t]];
                v = s;
                break;
            }
        }
    }
    out.resize(roots_.size());
    for (size_t r = 0; r < roots_.size(); ++r) out[r] = vals_[roots_[r]];
}

template class Program<double>;
template class Program<quad>;

double symbol_norm(const Program<double>& prog, const SupGrid& grid) {
    std::vector<double> sup(prog.num_roots(), 0.0);
    std::vector<Cplx<double>> out;
    auto visit = [&](double xi) {
        prog.eval(xi, out);
        for (size_t r = 0; r < out.size(); ++r) sup[r] = std::max(sup[r], abs(out[r]));
    };
    const long n = static_cast<long>((grid.hi - grid.lo) * grid.per_unit);
    for (long k = 0; k <= n; ++k) visit(grid.lo + (grid.hi - grid.lo) * double(k) / double(n));
    for (double x : grid.extra) visit(x);
    double s = 0;
    for (double v : sup) s += v;
    return s;
}

}  // namespace qpg
