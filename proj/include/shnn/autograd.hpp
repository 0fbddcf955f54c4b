// Minimal reverse-mode gradient engine over a fixed matrix-operation set:
// matmul, add/sub/scale, bias broadcast, ReLU, sigmoid, tanh, reshape,
// row gather, column concat, per-edge mean, blockwise Kronecker apply,
// block-sparse sheaf-Laplacian apply, dropout mask and softmax cross-entropy.
//
// The tape owns the nodes; backward walks them in reverse creation order.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "shnn/errors.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/laplacian.hpp"
#include "shnn/matrix.hpp"
#include "shnn/rng.hpp"
#include "shnn/sheaf.hpp"

namespace shnn::ad {

struct Node {
    Matrix val;
    Matrix grad;  // sized on first accumulation
    bool needs_grad = true;
    std::function<void(Node&)> backward;  // pushes this->grad into parents

    void accumulate(const Matrix& g) {
        if (grad.empty())
            grad = g;
        else
            grad += g;
    }
};

class Tape {
public:
    Node* leaf(Matrix v, bool needs_grad = true) {
        auto n = std::make_unique<Node>();
        n->val = std::move(v);
        n->needs_grad = needs_grad;
        nodes_.push_back(std::move(n));
        return nodes_.back().get();
    }

    Node* make(Matrix v, std::function<void(Node&)> back) {
        Node* n = leaf(std::move(v));
        n->backward = std::move(back);
        return n;
    }

    void backward(Node* loss) {
        if (loss->val.rows() != 1 || loss->val.cols() != 1) throw UnsupportedOp("backward: loss must be scalar");
        loss->grad = Matrix(1, 1);
        loss->grad(0, 0) = 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            Node& n = **it;
            if (n.backward && !n.grad.empty()) n.backward(n);
        }
    }

private:
    std::vector<std::unique_ptr<Node>> nodes_;
};

inline Node* matmul(Tape& t, Node* a, Node* b) {
    return t.make(a->val * b->val, [a, b](Node& n) {
        if (a->needs_grad) a->accumulate(n.grad * b->val.transpose());
        if (b->needs_grad) b->accumulate(a->val.transpose() * n.grad);
    });
}

// a * b^T without materializing the transpose on the tape.
inline Node* matmul_nt(Tape& t, Node* a, Node* b) {
    return t.make(a->val * b->val.transpose(), [a, b](Node& n) {
        if (a->needs_grad) a->accumulate(n.grad * b->val);
        if (b->needs_grad) b->accumulate(n.grad.transpose() * a->val);
    });
}

// a^T * b without materializing the transpose on the tape.
inline Node* matmul_tn(Tape& t, Node* a, Node* b) {
    return t.make(a->val.transpose() * b->val, [a, b](Node& n) {
        if (a->needs_grad) a->accumulate(b->val * n.grad.transpose());
        if (b->needs_grad) b->accumulate(a->val * n.grad);
    });
}

inline Node* add(Tape& t, Node* a, Node* b) {
    return t.make(a->val + b->val, [a, b](Node& n) {
        if (a->needs_grad) a->accumulate(n.grad);
        if (b->needs_grad) b->accumulate(n.grad);
    });
}

inline Node* sub(Tape& t, Node* a, Node* b) {
    return t.make(a->val - b->val, [a, b](Node& n) {
        if (a->needs_grad) a->accumulate(n.grad);
        if (b->needs_grad) b->accumulate(n.grad * -1.0);
    });
}

inline Node* scale(Tape& t, Node* a, double s) {
    return t.make(a->val * s, [a, s](Node& n) {
        if (a->needs_grad) a->accumulate(n.grad * s);
    });
}

// Broadcast-add a 1 x c bias row to every row of a.
inline Node* add_bias(Tape& t, Node* a, Node* bias) {
    if (bias->val.rows() != 1 || bias->val.cols() != a->val.cols()) throw ShapeError("add_bias: bias shape");
    Matrix v = a->val;
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) v(i, j) += bias->val(0, j);
    return t.make(std::move(v), [a, bias](Node& n) {
        if (a->needs_grad) a->accumulate(n.grad);
        if (bias->needs_grad) {
            Matrix g(1, n.grad.cols());
            for (int i = 0; i < n.grad.rows(); ++i)
                for (int j = 0; j < n.grad.cols(); ++j) g(0, j) += n.grad(i, j);
            bias->accumulate(g);
        }
    });
}

inline Node* relu(Tape& t, Node* a) {
    Matrix v = a->val;
    for (double& x : v.data())
        if (x < 0.0) x = 0.0;
    return t.make(std::move(v), [a](Node& n) {
        if (!a->needs_grad) return;
        Matrix g = n.grad;
        for (std::size_t i = 0; i < g.data().size(); ++i)
            if (a->val.data()[i] <= 0.0) g.data()[i] = 0.0;
        a->accumulate(g);
    });
}

inline Node* tanh_op(Tape& t, Node* a) {
    Matrix v = a->val;
    for (double& x : v.data()) x = std::tanh(x);
    Node* out = t.leaf(std::move(v));
    out->backward = [a, out](Node& n) {
        if (!a->needs_grad) return;
        Matrix g = n.grad;
        for (std::size_t i = 0; i < g.data().size(); ++i) {
            const double y = out->val.data()[i];
            g.data()[i] *= 1.0 - y * y;
        }
        a->accumulate(g);
    };
    return out;
}

inline Node* sigmoid_op(Tape& t, Node* a) {
    Matrix v = a->val;
    for (double& x : v.data()) x = 1.0 / (1.0 + std::exp(-x));
    Node* out = t.leaf(std::move(v));
    out->backward = [a, out](Node& n) {
        if (!a->needs_grad) return;
        Matrix g = n.grad;
        for (std::size_t i = 0; i < g.data().size(); ++i) {
            const double y = out->val.data()[i];
            g.data()[i] *= y * (1.0 - y);
        }
        a->accumulate(g);
    };
    return out;
}

// Row-major reshape; gradient reshapes back.
inline Node* reshape(Tape& t, Node* a, int rows, int cols) {
    if (rows * cols != a->val.rows() * a->val.cols()) throw ShapeError("reshape: element count mismatch");
    Matrix v(rows, cols, a->val.data());
    const int ar = a->val.rows(), ac = a->val.cols();
    return t.make(std::move(v), [a, ar, ac](Node& n) {
        if (a->needs_grad) a->accumulate(Matrix(ar, ac, n.grad.data()));
    });
}

inline Node* gather_rows(Tape& t, Node* a, std::vector<int> idx) {
    Matrix v(static_cast<int>(idx.size()), a->val.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < a->val.cols(); ++j) v(static_cast<int>(i), j) = a->val(idx[i], j);
    return t.make(std::move(v), [a, idx = std::move(idx)](Node& n) {
        if (!a->needs_grad) return;
        Matrix g(a->val.rows(), a->val.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < g.cols(); ++j) g(idx[i], j) += n.grad(static_cast<int>(i), j);
        a->accumulate(g);
    });
}

inline Node* concat_cols(Tape& t, Node* a, Node* b) {
    if (a->val.rows() != b->val.rows()) throw ShapeError("concat_cols: row mismatch");
    Matrix v(a->val.rows(), a->val.cols() + b->val.cols());
    for (int i = 0; i < v.rows(); ++i) {
        for (int j = 0; j < a->val.cols(); ++j) v(i, j) = a->val(i, j);
        for (int j = 0; j < b->val.cols(); ++j) v(i, a->val.cols() + j) = b->val(i, j);
    }
    return t.make(std::move(v), [a, b](Node& n) {
        if (a->needs_grad) {
            Matrix g(a->val.rows(), a->val.cols());
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) g(i, j) = n.grad(i, j);
            a->accumulate(g);
        }
        if (b->needs_grad) {
            Matrix g(b->val.rows(), b->val.cols());
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) g(i, j) = n.grad(i, a->val.cols() + j);
            b->accumulate(g);
        }
    });
}

// Per-hyperedge mean of the member rows of a (n x f) -> (m x f).
inline Node* edge_mean(Tape& t, const Hypergraph& h, Node* a) {
    Matrix v(h.num_hyperedges(), a->val.cols());
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        for (int u : mem)
            for (int j = 0; j < a->val.cols(); ++j) v(e, j) += a->val(u, j);
        for (int j = 0; j < a->val.cols(); ++j) v(e, j) /= static_cast<double>(mem.size());
    }
    return t.make(std::move(v), [a, &h](Node& n) {
        if (!a->needs_grad) return;
        Matrix g(a->val.rows(), a->val.cols());
        for (int e = 0; e < h.num_hyperedges(); ++e) {
            const auto& mem = h.hyperedges[e];
            const double w = 1.0 / static_cast<double>(mem.size());
            for (int u : mem)
                for (int j = 0; j < g.cols(); ++j) g(u, j) += w * n.grad(e, j);
        }
        a->accumulate(g);
    });
}

// (I_n kron W1) applied to an nd x f signal: per node, W1 (d x d) times the
// node's d x f slab.
inline Node* kron_apply(Tape& t, Node* w1, Node* x, int n, int d) {
    if (x->val.rows() != n * d || w1->val.rows() != d || w1->val.cols() != d) throw ShapeError("kron_apply: shapes");
    Matrix v(x->val.rows(), x->val.cols());
    for (int vtx = 0; vtx < n; ++vtx) v.set_rows_block(vtx * d, w1->val * x->val.rows_block(vtx * d, d));
    return t.make(std::move(v), [w1, x, n, d](Node& nd) {
        const Matrix w1t = w1->val.transpose();
        Matrix gw(d, d);
        Matrix gx(x->val.rows(), x->val.cols());
        for (int vtx = 0; vtx < n; ++vtx) {
            const Matrix gv = nd.grad.rows_block(vtx * d, d);
            if (x->needs_grad) gx.set_rows_block(vtx * d, w1t * gv);
            if (w1->needs_grad) gw += gv * x->val.rows_block(vtx * d, d).transpose();
        }
        if (x->needs_grad) x->accumulate(gx);
        if (w1->needs_grad) w1->accumulate(gw);
    });
}

// Inverted-scaling dropout on all entries.
inline Node* dropout(Tape& t, Node* a, double rate, Rng& rng, bool training) {
    if (rate <= 0.0 || !training) return a;
    Matrix mask(a->val.rows(), a->val.cols());
    const double keep = 1.0 - rate;
    for (double& m : mask.data()) m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.data().size(); ++i) v.data()[i] *= mask.data()[i];
    return t.make(std::move(v), [a, mask = std::move(mask)](Node& n) {
        if (!a->needs_grad) return;
        Matrix g = n.grad;
        for (std::size_t i = 0; i < g.data().size(); ++i) g.data()[i] *= mask.data()[i];
        a->accumulate(g);
    });
}

// Mean softmax cross-entropy of the rows listed in idx.
inline Node* softmax_cross_entropy(Tape& t, Node* logits, const std::vector<int>& labels, const std::vector<int>& idx) {
    if (idx.empty()) throw UnsupportedOp("softmax_cross_entropy: empty index set");
    const int c = logits->val.cols();
    Matrix probs(static_cast<int>(idx.size()), c);
    double loss = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const int i = idx[k];
        double mx = logits->val(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, logits->val(i, j));
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += std::exp(logits->val(i, j) - mx);
        const double logz = std::log(z) + mx;
        for (int j = 0; j < c; ++j) probs(static_cast<int>(k), j) = std::exp(logits->val(i, j) - logz);
        loss += logz - logits->val(i, labels[i]);
    }
    loss /= static_cast<double>(idx.size());
    Matrix v(1, 1);
    v(0, 0) = loss;
    return t.make(std::move(v), [logits, &labels, idx, probs = std::move(probs)](Node& n) {
        if (!logits->needs_grad) return;
        const double w = n.grad(0, 0) / static_cast<double>(idx.size());
        Matrix g(logits->val.rows(), logits->val.cols());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const int i = idx[k];
            for (int j = 0; j < g.cols(); ++j) g(i, j) = w * probs(static_cast<int>(k), j);
            g(i, labels[i]) -= w;
        }
        logits->accumulate(g);
    });
}

// ---------------------------------------------------------------------------
// Differentiable sheaf-Laplacian application.

enum class LaplacianVariant { Linear, Nonlinear };

// Fixed context captured outside the tape.
struct SheafApplyContext {
    const Hypergraph* h = nullptr;
    int d = 1;
    MapKind kind = MapKind::diagonal();
    LaplacianVariant variant = LaplacianVariant::Linear;
    bool mediators = false;
    NormalizerMode norm_mode = NormalizerMode::Degree;
    NormalizerStyle norm_style = NormalizerStyle::Symmetric;
    double epsilon = 1e-6;
    std::uint64_t pair_seed = 0;  // tie-break stream for the nonlinear variant
    // When set, the nonlinear pair selection reads this signal (the layer
    // input) instead of the operand of the apply itself.
    const Matrix* selection_signal = nullptr;
    // When set, the nonlinear branch folds min over hyperedges of the
    // selection margin (winner minus runner-up squared distance) into the
    // target, so callers can detect tie-break-decided selections.
    double* selection_margin = nullptr;
};

namespace detail {

// Scale vector: per-node diagonal of D^{-1/2} (symmetric) or D^{-1}
// (asymmetric). For degree mode this is a constant of the graph; for sheaf
// mode it is recomputed from the map values and treated as a constant of the
// forward pass (no gradient through the normalizer).
inline std::vector<Matrix> scale_blocks_for(const SheafApplyContext& ctx, const std::vector<Matrix>& maps) {
    const Hypergraph& h = *ctx.h;
    const int d = ctx.d;
    std::vector<Matrix> dv(h.num_nodes, Matrix::zeros(d, d));
    if (ctx.norm_mode == NormalizerMode::Sheaf) {
        const auto pairs = incidence_pairs(h);
        for (std::size_t i = 0; i < pairs.size(); ++i) dv[pairs[i].first] += maps[i].transpose() * maps[i];
        for (auto& b : dv)
            for (int i = 0; i < d; ++i) b(i, i) += ctx.epsilon;
    } else {
        const auto deg = degrees(h);
        for (int v = 0; v < h.num_nodes; ++v) {
            const double x = deg.node_degrees[v] == 0 ? ctx.epsilon : static_cast<double>(deg.node_degrees[v]);
            for (int i = 0; i < d; ++i) dv[v](i, i) = x;
        }
    }
    const bool inv_sqrt = ctx.norm_style == NormalizerStyle::Symmetric;
    std::vector<Matrix> out;
    out.reserve(dv.size());
    for (auto& b : dv) {
        Matrix s(d, d);
        bool diagonal = true;
        for (int i = 0; i < d && diagonal; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j && b(i, j) != 0.0) diagonal = false;
        if (diagonal) {
            for (int i = 0; i < d; ++i) {
                const double lam = b(i, i);
                if (lam < 1e-12) throw SingularBlock("normalizer block eigenvalue below 1e-12");
                s(i, i) = inv_sqrt ? 1.0 / std::sqrt(lam) : 1.0 / lam;
            }
        } else {
            Matrix vecs;
            const auto eig = eigen_sym(b, vecs);
            for (double lam : eig)
                if (lam < 1e-12) throw SingularBlock("normalizer block eigenvalue below 1e-12");
            Matrix f(d, d);
            for (int i = 0; i < d; ++i) f(i, i) = inv_sqrt ? 1.0 / std::sqrt(eig[i]) : 1.0 / eig[i];
            s = vecs * f * vecs.transpose();
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline Matrix scale_signal(const std::vector<Matrix>& s, const Matrix& x, int d) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t v = 0; v < s.size(); ++v) y.set_rows_block(static_cast<int>(v) * d, s[v] * x.rows_block(static_cast<int>(v) * d, d));
    return y;
}

// Sum over relations of (1/delta_e) F_v^T (F_v z_v - F_u z_u) into row block v.
inline Matrix apply_relations(const Hypergraph& h, const std::vector<Matrix>& maps, const std::vector<Relation>& rel,
                              const Matrix& z, int d) {
    const auto off = incidence_offsets(h);
    Matrix y(z.rows(), z.cols());
    for (const auto& r : rel) {
        const double w = 1.0 / static_cast<double>(h.hyperedges[r.edge].size());
        const Matrix& fv = maps[off[r.edge] + shnn::detail::edge_position(h, r.edge, r.v)];
        const Matrix& fu = maps[off[r.edge] + shnn::detail::edge_position(h, r.edge, r.u)];
        const Matrix contrib = fv.transpose() * (fv * z.rows_block(r.v * d, d) - fu * z.rows_block(r.u * d, d)) * w;
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < z.cols(); ++c) y(r.v * d + i, c) += contrib(i, c);
    }
    return y;
}

}  // namespace detail

// y = Delta x where Delta is the normalized (linear or non-linear) sheaf
// Laplacian materialized from the per-incidence parameter rows. Gradients
// flow into both the signal and the parameters; the non-linear argmax pair
// selection and the sheaf-mode normalizer are constants of the forward pass.
inline Node* sheaf_delta_apply(Tape& t, const SheafApplyContext& ctx, Node* params, Node* x) {
    const Hypergraph& h = *ctx.h;
    const int d = ctx.d;
    const auto pairs = incidence_pairs(h);
    if (params->val.rows() != static_cast<int>(pairs.size()) || params->val.cols() != ctx.kind.param_width(d))
        throw ShapeError("sheaf_delta_apply: parameter matrix shape");
    if (x->val.rows() != h.num_nodes * d) throw ShapeError("sheaf_delta_apply: signal rows != n*d");

    auto maps = std::make_shared<std::vector<Matrix>>();
    maps->reserve(pairs.size());
    for (int i = 0; i < params->val.rows(); ++i) {
        std::vector<double> row(params->val.cols());
        for (int j = 0; j < params->val.cols(); ++j) row[j] = params->val(i, j);
        maps->push_back(materialize(row, d, ctx.kind));
    }
    auto scales = std::make_shared<std::vector<Matrix>>(detail::scale_blocks_for(ctx, *maps));
    const bool sym = ctx.norm_style == NormalizerStyle::Symmetric;
    auto xhat = std::make_shared<Matrix>(sym ? detail::scale_signal(*scales, x->val, d) : x->val);

    auto rel = std::make_shared<std::vector<Relation>>();
    if (ctx.variant == LaplacianVariant::Linear) {
        *rel = linear_relations(h);
    } else {
        // Pair selection on the normalized image, per the mediators variant.
        Sheaf s;
        s.stalk_dim = d;
        s.kind = ctx.kind;
        s.params.reserve(pairs.size());
        for (int i = 0; i < params->val.rows(); ++i) {
            std::vector<double> row(params->val.cols());
            for (int j = 0; j < params->val.cols(); ++j) row[j] = params->val(i, j);
            s.params.push_back(std::move(row));
        }
        Normalizer nm;
        nm.style = ctx.norm_style;
        nm.scale_blocks = *scales;
        nm.d_blocks = *scales;
        const Matrix& sel = ctx.selection_signal ? *ctx.selection_signal : x->val;
        const auto dp = discrepant_pairs(h, s, sel, &nm, ctx.pair_seed);
        if (ctx.selection_margin)
            for (const auto& p : dp) *ctx.selection_margin = std::min(*ctx.selection_margin, p.margin);
        *rel = nonlinear_relations(h, dp, ctx.mediators);
    }

    Matrix acc = detail::apply_relations(h, *maps, *rel, *xhat, d);
    Matrix y = detail::scale_signal(*scales, acc, d);

    MapKind kind = ctx.kind;
    const Hypergraph* hp = ctx.h;
    return t.make(std::move(y), [params, x, maps, scales, xhat, rel, hp, d, kind, sym](Node& n) {
        const Hypergraph& h = *hp;
        const Matrix ghat = detail::scale_signal(*scales, n.grad, d);
        if (x->needs_grad) {
            Matrix gx = detail::apply_relations(h, *maps, *rel, ghat, d);
            if (sym) gx = detail::scale_signal(*scales, gx, d);
            x->accumulate(gx);
        }
        if (!params->needs_grad) return;
        const auto off = incidence_offsets(h);
        std::vector<Matrix> gf(maps->size(), Matrix::zeros(d, d));
        for (const auto& r : *rel) {
            const double w = 1.0 / static_cast<double>(h.hyperedges[r.edge].size());
            const int iv = off[r.edge] + shnn::detail::edge_position(h, r.edge, r.v);
            const int iu = off[r.edge] + shnn::detail::edge_position(h, r.edge, r.u);
            const Matrix& fv = (*maps)[iv];
            const Matrix& fu = (*maps)[iu];
            const Matrix gv = ghat.rows_block(r.v * d, d);
            const Matrix xv = xhat->rows_block(r.v * d, d);
            const Matrix xu = xhat->rows_block(r.u * d, d);
            gf[iv] += (fv * (xv * gv.transpose() + gv * xv.transpose()) - fu * xu * gv.transpose()) * w;
            gf[iu] += fv * gv * xu.transpose() * -w;
        }
        Matrix gp(params->val.rows(), params->val.cols());
        for (std::size_t i = 0; i < gf.size(); ++i) {
            const Matrix& g = gf[i];
            switch (kind.tag) {
                case MapKindTag::Diagonal:
                    for (int k = 0; k < d; ++k) gp(static_cast<int>(i), k) = g(k, k);
                    break;
                case MapKindTag::General:
                    for (int a = 0; a < d; ++a)
                        for (int b = 0; b < d; ++b) gp(static_cast<int>(i), a * d + b) = g(a, b);
                    break;
                case MapKindTag::LowRank: {
                    const int r = kind.rank;
                    Matrix amat(d, r), bmat(r, d);
                    for (int a = 0; a < d; ++a)
                        for (int k = 0; k < r; ++k) amat(a, k) = params->val(static_cast<int>(i), a * r + k);
                    for (int k = 0; k < r; ++k)
                        for (int b = 0; b < d; ++b) bmat(k, b) = params->val(static_cast<int>(i), d * r + k * d + b);
                    const Matrix ga = g * bmat.transpose();
                    const Matrix gb = amat.transpose() * g;
                    for (int a = 0; a < d; ++a)
                        for (int k = 0; k < r; ++k) gp(static_cast<int>(i), a * r + k) = ga(a, k);
                    for (int k = 0; k < r; ++k)
                        for (int b = 0; b < d; ++b) gp(static_cast<int>(i), d * r + k * d + b) = gb(k, b);
                    for (int k = 0; k < d; ++k) gp(static_cast<int>(i), 2 * d * r + k) = g(k, k);
                    break;
                }
            }
        }
        params->accumulate(gp);
    });
}

}  // namespace shnn::ad
