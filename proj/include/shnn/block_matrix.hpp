// Block-sparse (nd x nd) operator stored as d x d blocks keyed by node pair.
#pragma once

#include <map>
#include <ostream>
#include <utility>

#include "shnn/errors.hpp"
#include "shnn/matrix.hpp"

namespace shnn {

class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(int n, int d) : n_(n), d_(d) {}

    static BlockMatrix identity(int n, int d) {
        BlockMatrix m(n, d);
        for (int v = 0; v < n; ++v) m.blocks_[{v, v}] = Matrix::identity(d);
        return m;
    }

    int num_nodes() const { return n_; }
    int block_dim() const { return d_; }
    int dim() const { return n_ * d_; }

    const std::map<std::pair<int, int>, Matrix>& blocks() const { return blocks_; }

    bool has_block(int u, int v) const { return blocks_.count({u, v}) != 0; }

    // Zero when absent.
    Matrix block(int u, int v) const {
        auto it = blocks_.find({u, v});
        return it == blocks_.end() ? Matrix::zeros(d_, d_) : it->second;
    }

    void set_block(int u, int v, Matrix m) {
        if (m.rows() != d_ || m.cols() != d_) throw ShapeError("set_block: block size mismatch");
        blocks_[{u, v}] = std::move(m);
    }

    void add_to_block(int u, int v, const Matrix& m) {
        if (m.rows() != d_ || m.cols() != d_) throw ShapeError("add_to_block: block size mismatch");
        auto it = blocks_.find({u, v});
        if (it == blocks_.end())
            blocks_.emplace(std::pair{u, v}, m);
        else
            it->second += m;
    }

    // Block-sparse product with an (nd) x f signal. Blocks contribute in
    // ascending (u, v) key order, so the summation order is deterministic.
    Matrix apply(const Matrix& x) const {
        if (x.rows() != dim()) throw ShapeError("apply: signal row count != n*d");
        Matrix y(dim(), x.cols());
        for (const auto& [key, b] : blocks_) {
            const auto [u, v] = key;
            for (int i = 0; i < d_; ++i)
                for (int k = 0; k < d_; ++k) {
                    const double w = b(i, k);
                    if (w == 0.0) continue;
                    for (int c = 0; c < x.cols(); ++c) y(u * d_ + i, c) += w * x(v * d_ + k, c);
                }
        }
        return y;
    }

    Matrix to_dense() const {
        Matrix m(dim(), dim());
        for (const auto& [key, b] : blocks_) {
            const auto [u, v] = key;
            for (int i = 0; i < d_; ++i)
                for (int j = 0; j < d_; ++j) m(u * d_ + i, v * d_ + j) = b(i, j);
        }
        return m;
    }

    // Coordinate-list export: `row col value` per nonzero scalar, sorted by
    // (row, col), shortest round-trip decimals. Walks the row-block ranges of
    // the key-sorted map, so no dense staging is needed.
    void export_coordinates(std::ostream& out) const {
        for (int u = 0; u < n_; ++u) {
            auto lo = blocks_.lower_bound({u, 0});
            auto hi = blocks_.lower_bound({u + 1, 0});
            if (lo == hi) continue;
            for (int i = 0; i < d_; ++i)
                for (auto it = lo; it != hi; ++it) {
                    const int v = it->first.second;
                    for (int j = 0; j < d_; ++j) {
                        const double x = it->second(i, j);
                        if (x != 0.0) out << u * d_ + i << ' ' << v * d_ + j << ' ' << format_double(x) << '\n';
                    }
                }
        }
    }

private:
    int n_ = 0;
    int d_ = 0;
    std::map<std::pair<int, int>, Matrix> blocks_;
};

}  // namespace shnn
