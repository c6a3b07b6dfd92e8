#include "cognn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cognn {
namespace ops {

namespace {

void check_matrix(const Tensor& t, const char* who) {
    if (!t.is_matrix()) {
        fail(Error::Code::invalid_argument,
             std::string(who) + ": expected a matrix, got shape " + shape_to_string(t.shape()));
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape() != b.shape()) {
        fail(Error::Code::invalid_argument,
             std::string(who) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                 shape_to_string(b.shape()));
    }
}

Tensor make_output(Shape shape, bool track) {
    return Tensor::zeros(std::move(shape), track);
}

void record(std::function<void()> rule) { Tape::active()->record(std::move(rule)); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matrix(a, "matmul");
    check_matrix(b, "matmul");
    if (a.cols() != b.rows()) {
        fail(Error::Code::invalid_argument,
             "matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " vs " +
                 shape_to_string(b.shape()));
    }
    const int n = a.rows(), k = a.cols(), m = b.cols();
    const bool track = tracking(a, b);
    Tensor out = make_output({n, m}, track);
    {
        const double* ad = a.data();
        const double* bd = b.data();
        double* cd = out.data();
        for (int i = 0; i < n; ++i) {
            for (int p = 0; p < k; ++p) {
                const double av = ad[static_cast<std::size_t>(i) * k + p];
                if (av == 0.0) continue;
                const double* brow = bd + static_cast<std::size_t>(p) * m;
                double* crow = cd + static_cast<std::size_t>(i) * m;
                for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
            }
        }
    }
    if (track) {
        Tensor av = a, bv = b, ov = out;
        record([av, bv, ov, n, k, m]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                const double* bd = bv.data();
                // dA = dC * B^T
                for (int i = 0; i < n; ++i) {
                    for (int p = 0; p < k; ++p) {
                        const double* grow = g + static_cast<std::size_t>(i) * m;
                        const double* brow = bd + static_cast<std::size_t>(p) * m;
                        double acc = 0.0;
                        for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
                        da[static_cast<std::size_t>(i) * k + p] += acc;
                    }
                }
            }
            if (bv.requires_grad()) {
                double* db = bv.grad_data();
                const double* ad = av.data();
                // dB = A^T * dC
                for (int i = 0; i < n; ++i) {
                    const double* grow = g + static_cast<std::size_t>(i) * m;
                    for (int p = 0; p < k; ++p) {
                        const double aval = ad[static_cast<std::size_t>(i) * k + p];
                        if (aval == 0.0) continue;
                        double* brow = db + static_cast<std::size_t>(p) * m;
                        for (int j = 0; j < m; ++j) brow[j] += aval * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor spmm(const NormalizedAdjacency& s, const Tensor& x) {
    check_matrix(x, "spmm");
    if (x.rows() != s.n) {
        fail(Error::Code::invalid_argument,
             "spmm: adjacency over " + std::to_string(s.n) + " nodes applied to features " +
                 shape_to_string(x.shape()));
    }
    const int n = s.n, m = x.cols();
    const bool track = tracking(x);
    Tensor out = make_output({n, m}, track);
    {
        const double* xd = x.data();
        double* yd = out.data();
        for (int i = 0; i < n; ++i) {
            double* yrow = yd + static_cast<std::size_t>(i) * m;
            for (int p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
                const double v = s.values[p];
                const double* xrow = xd + static_cast<std::size_t>(s.col_idx[p]) * m;
                for (int j = 0; j < m; ++j) yrow[j] += v * xrow[j];
            }
        }
    }
    if (track) {
        // Copy the CSR arrays so the rule does not dangle if the adjacency
        // goes out of scope before backward (pooled structures are temporary).
        std::vector<int> row_ptr = s.row_ptr, col_idx = s.col_idx;
        std::vector<double> values = s.values;
        Tensor xv = x, ov = out;
        record([xv, ov, row_ptr, col_idx, values, n, m]() mutable {
            const double* g = ov.grad_data();
            double* dx = xv.grad_data();
            // dX += S^T dY
            for (int i = 0; i < n; ++i) {
                const double* grow = g + static_cast<std::size_t>(i) * m;
                for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                    const double v = values[p];
                    double* drow = dx + static_cast<std::size_t>(col_idx[p]) * m;
                    for (int j = 0; j < m; ++j) drow[j] += v * grow[j];
                }
            }
        });
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    const bool track = tracking(a, b);
    Tensor out = make_output(a.shape(), track);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (track) {
        Tensor av = a, bv = b, ov = out;
        record([av, bv, ov, n]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                for (std::size_t i = 0; i < n; ++i) da[i] += g[i];
            }
            if (bv.requires_grad()) {
                double* db = bv.grad_data();
                for (std::size_t i = 0; i < n; ++i) db[i] += g[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    const bool track = tracking(a, b);
    Tensor out = make_output(a.shape(), track);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (track) {
        Tensor av = a, bv = b, ov = out;
        record([av, bv, ov, n]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                const double* bd = bv.data();
                for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * bd[i];
            }
            if (bv.requires_grad()) {
                double* db = bv.grad_data();
                const double* ad = av.data();
                for (std::size_t i = 0; i < n; ++i) db[i] += g[i] * ad[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    const bool track = tracking(a);
    Tensor out = make_output(a.shape(), track);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = c * a.data()[i];
    if (track) {
        Tensor av = a, ov = out;
        record([av, ov, c, n]() mutable {
            const double* g = ov.grad_data();
            double* da = av.grad_data();
            for (std::size_t i = 0; i < n; ++i) da[i] += c * g[i];
        });
    }
    return out;
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
    if (s.size() != 1) {
        fail(Error::Code::invalid_argument, "mul_scalar: gate must be a scalar, got " + shape_to_string(s.shape()));
    }
    const bool track = tracking(a, s);
    Tensor out = make_output(a.shape(), track);
    const std::size_t n = a.size();
    const double sv = s.value();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = sv * a.data()[i];
    if (track) {
        Tensor av = a, svr = s, ov = out;
        record([av, svr, ov, sv, n]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                for (std::size_t i = 0; i < n; ++i) da[i] += sv * g[i];
            }
            if (svr.requires_grad()) {
                const double* ad = av.data();
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) acc += ad[i] * g[i];
                svr.grad_data()[0] += acc;
            }
        });
    }
    return out;
}

Tensor relu(const Tensor& a) {
    const bool track = tracking(a);
    Tensor out = make_output(a.shape(), track);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    if (track) {
        Tensor av = a, ov = out;
        record([av, ov, n]() mutable {
            const double* g = ov.grad_data();
            const double* ad = av.data();
            double* da = av.grad_data();
            for (std::size_t i = 0; i < n; ++i) {
                if (ad[i] > 0.0) da[i] += g[i];
            }
        });
    }
    return out;
}

Tensor tanh(const Tensor& a) {
    const bool track = tracking(a);
    Tensor out = make_output(a.shape(), track);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::tanh(a.data()[i]);
    if (track) {
        Tensor av = a, ov = out;
        record([av, ov, n]() mutable {
            const double* g = ov.grad_data();
            const double* od = ov.data();
            double* da = av.grad_data();
            for (std::size_t i = 0; i < n; ++i) da[i] += (1.0 - od[i] * od[i]) * g[i];
        });
    }
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    check_matrix(a, "concat_cols");
    check_matrix(b, "concat_cols");
    if (a.rows() != b.rows()) {
        fail(Error::Code::invalid_argument,
             "concat_cols: row counts disagree, " + shape_to_string(a.shape()) + " vs " +
                 shape_to_string(b.shape()));
    }
    const int n = a.rows(), ca = a.cols(), cb = b.cols();
    const bool track = tracking(a, b);
    Tensor out = make_output({n, ca + cb}, track);
    for (int i = 0; i < n; ++i) {
        double* orow = out.data() + static_cast<std::size_t>(i) * (ca + cb);
        const double* arow = a.data() + static_cast<std::size_t>(i) * ca;
        const double* brow = b.data() + static_cast<std::size_t>(i) * cb;
        std::copy(arow, arow + ca, orow);
        std::copy(brow, brow + cb, orow + ca);
    }
    if (track) {
        Tensor av = a, bv = b, ov = out;
        record([av, bv, ov, n, ca, cb]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                for (int i = 0; i < n; ++i) {
                    const double* grow = g + static_cast<std::size_t>(i) * (ca + cb);
                    for (int j = 0; j < ca; ++j) da[static_cast<std::size_t>(i) * ca + j] += grow[j];
                }
            }
            if (bv.requires_grad()) {
                double* db = bv.grad_data();
                for (int i = 0; i < n; ++i) {
                    const double* grow = g + static_cast<std::size_t>(i) * (ca + cb) + ca;
                    for (int j = 0; j < cb; ++j) db[static_cast<std::size_t>(i) * cb + j] += grow[j];
                }
            }
        });
    }
    return out;
}

Tensor row_select(const Tensor& a, const std::vector<int>& indices) {
    check_matrix(a, "row_select");
    const int n = a.rows(), c = a.cols();
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] < 0 || indices[r] >= n) {
            fail(Error::Code::invalid_argument,
                 "row_select: index " + std::to_string(indices[r]) + " out of range [0, " +
                     std::to_string(n) + ") at position " + std::to_string(r));
        }
    }
    const int k = static_cast<int>(indices.size());
    const bool track = tracking(a);
    Tensor out = make_output({k, c}, track);
    for (int r = 0; r < k; ++r) {
        const double* arow = a.data() + static_cast<std::size_t>(indices[r]) * c;
        std::copy(arow, arow + c, out.data() + static_cast<std::size_t>(r) * c);
    }
    if (track) {
        Tensor av = a, ov = out;
        std::vector<int> idx = indices;
        record([av, ov, idx, k, c]() mutable {
            const double* g = ov.grad_data();
            double* da = av.grad_data();
            for (int r = 0; r < k; ++r) {
                double* drow = da + static_cast<std::size_t>(idx[r]) * c;
                const double* grow = g + static_cast<std::size_t>(r) * c;
                for (int j = 0; j < c; ++j) drow[j] += grow[j];
            }
        });
    }
    return out;
}

Tensor mul_col_broadcast(const Tensor& a, const Tensor& z) {
    check_matrix(a, "mul_col_broadcast");
    check_matrix(z, "mul_col_broadcast");
    if (z.cols() != 1 || z.rows() != a.rows()) {
        fail(Error::Code::invalid_argument,
             "mul_col_broadcast: gate must be [" + std::to_string(a.rows()) + "x1], got " +
                 shape_to_string(z.shape()));
    }
    const int n = a.rows(), c = a.cols();
    const bool track = tracking(a, z);
    Tensor out = make_output({n, c}, track);
    for (int i = 0; i < n; ++i) {
        const double zv = z.data()[i];
        const double* arow = a.data() + static_cast<std::size_t>(i) * c;
        double* orow = out.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) orow[j] = zv * arow[j];
    }
    if (track) {
        Tensor av = a, zv = z, ov = out;
        record([av, zv, ov, n, c]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                const double* zd = zv.data();
                for (int i = 0; i < n; ++i) {
                    const double* grow = g + static_cast<std::size_t>(i) * c;
                    double* drow = da + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) drow[j] += zd[i] * grow[j];
                }
            }
            if (zv.requires_grad()) {
                double* dz = zv.grad_data();
                const double* ad = av.data();
                for (int i = 0; i < n; ++i) {
                    const double* grow = g + static_cast<std::size_t>(i) * c;
                    const double* arow = ad + static_cast<std::size_t>(i) * c;
                    double acc = 0.0;
                    for (int j = 0; j < c; ++j) acc += grow[j] * arow[j];
                    dz[i] += acc;
                }
            }
        });
    }
    return out;
}

Tensor add_row_broadcast(const Tensor& a, const Tensor& b) {
    check_matrix(a, "add_row_broadcast");
    check_matrix(b, "add_row_broadcast");
    if (b.rows() != 1 || b.cols() != a.cols()) {
        fail(Error::Code::invalid_argument,
             "add_row_broadcast: bias must be [1x" + std::to_string(a.cols()) + "], got " +
                 shape_to_string(b.shape()));
    }
    const int n = a.rows(), c = a.cols();
    const bool track = tracking(a, b);
    Tensor out = make_output({n, c}, track);
    for (int i = 0; i < n; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * c;
        double* orow = out.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) orow[j] = arow[j] + b.data()[j];
    }
    if (track) {
        Tensor av = a, bv = b, ov = out;
        record([av, bv, ov, n, c]() mutable {
            const double* g = ov.grad_data();
            if (av.requires_grad()) {
                double* da = av.grad_data();
                const std::size_t total = static_cast<std::size_t>(n) * c;
                for (std::size_t i = 0; i < total; ++i) da[i] += g[i];
            }
            if (bv.requires_grad()) {
                double* db = bv.grad_data();
                for (int i = 0; i < n; ++i) {
                    const double* grow = g + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) db[j] += grow[j];
                }
            }
        });
    }
    return out;
}

namespace {

std::vector<int> group_counts(const std::vector<int>& group_id, int group_count, int rows, const char* who) {
    if (static_cast<int>(group_id.size()) != rows) {
        fail(Error::Code::invalid_argument,
             std::string(who) + ": group_id length " + std::to_string(group_id.size()) +
                 " does not match row count " + std::to_string(rows));
    }
    std::vector<int> counts(group_count, 0);
    for (int g : group_id) {
        if (g < 0 || g >= group_count) {
            fail(Error::Code::invalid_argument, std::string(who) + ": group id " + std::to_string(g) + " out of range");
        }
        ++counts[g];
    }
    for (int g = 0; g < group_count; ++g) {
        if (counts[g] == 0) {
            fail(Error::Code::contract, std::string(who) + ": group " + std::to_string(g) + " has no rows");
        }
    }
    return counts;
}

}  // namespace

Tensor group_mean_rows(const Tensor& a, const std::vector<int>& group_id, int group_count) {
    check_matrix(a, "group_mean_rows");
    const int n = a.rows(), c = a.cols();
    std::vector<int> counts = group_counts(group_id, group_count, n, "group_mean_rows");
    const bool track = tracking(a);
    Tensor out = make_output({group_count, c}, track);
    // Summands are accumulated in sorted value order, which makes the mean a
    // function of the value multiset alone: row permutations reproduce it
    // bit-exactly.
    std::vector<std::vector<int>> members(group_count);
    for (int i = 0; i < n; ++i) members[group_id[i]].push_back(i);
    std::vector<double> column;
    for (int g = 0; g < group_count; ++g) {
        double* orow = out.data() + static_cast<std::size_t>(g) * c;
        const double inv = 1.0 / counts[g];
        for (int j = 0; j < c; ++j) {
            column.clear();
            for (int i : members[g]) column.push_back(a.data()[static_cast<std::size_t>(i) * c + j]);
            std::sort(column.begin(), column.end());
            double acc = 0.0;
            for (double v : column) acc += v;
            orow[j] = acc * inv;
        }
    }
    if (track) {
        Tensor av = a, ov = out;
        std::vector<int> gid = group_id;
        record([av, ov, gid, counts, n, c]() mutable {
            const double* g = ov.grad_data();
            double* da = av.grad_data();
            for (int i = 0; i < n; ++i) {
                const double inv = 1.0 / counts[gid[i]];
                const double* grow = g + static_cast<std::size_t>(gid[i]) * c;
                double* drow = da + static_cast<std::size_t>(i) * c;
                for (int j = 0; j < c; ++j) drow[j] += inv * grow[j];
            }
        });
    }
    return out;
}

Tensor group_max_rows(const Tensor& a, const std::vector<int>& group_id, int group_count) {
    check_matrix(a, "group_max_rows");
    const int n = a.rows(), c = a.cols();
    group_counts(group_id, group_count, n, "group_max_rows");
    const bool track = tracking(a);
    Tensor out = make_output({group_count, c}, track);
    // argmax per (group, column); ties resolve to the lowest row index.
    std::vector<int> argmax(static_cast<std::size_t>(group_count) * c, -1);
    for (int i = 0; i < n; ++i) {
        const int g = group_id[i];
        const double* arow = a.data() + static_cast<std::size_t>(i) * c;
        double* orow = out.data() + static_cast<std::size_t>(g) * c;
        int* amrow = argmax.data() + static_cast<std::size_t>(g) * c;
        for (int j = 0; j < c; ++j) {
            if (amrow[j] < 0 || arow[j] > orow[j]) {
                orow[j] = arow[j];
                amrow[j] = i;
            }
        }
    }
    if (track) {
        Tensor av = a, ov = out;
        record([av, ov, argmax, group_count, c]() mutable {
            const double* g = ov.grad_data();
            double* da = av.grad_data();
            for (int gi = 0; gi < group_count; ++gi) {
                const double* grow = g + static_cast<std::size_t>(gi) * c;
                const int* amrow = argmax.data() + static_cast<std::size_t>(gi) * c;
                for (int j = 0; j < c; ++j) {
                    da[static_cast<std::size_t>(amrow[j]) * c + j] += grow[j];
                }
            }
        });
    }
    return out;
}

Tensor expand_rows(const Tensor& rows, const std::vector<int>& group_id) {
    check_matrix(rows, "expand_rows");
    const int g_count = rows.rows(), c = rows.cols();
    const int n = static_cast<int>(group_id.size());
    for (int g : group_id) {
        if (g < 0 || g >= g_count) {
            fail(Error::Code::invalid_argument, "expand_rows: group id " + std::to_string(g) + " out of range");
        }
    }
    const bool track = tracking(rows);
    Tensor out = make_output({n, c}, track);
    for (int i = 0; i < n; ++i) {
        const double* srow = rows.data() + static_cast<std::size_t>(group_id[i]) * c;
        std::copy(srow, srow + c, out.data() + static_cast<std::size_t>(i) * c);
    }
    if (track) {
        Tensor rv = rows, ov = out;
        std::vector<int> gid = group_id;
        record([rv, ov, gid, n, c]() mutable {
            const double* g = ov.grad_data();
            double* dr = rv.grad_data();
            for (int i = 0; i < n; ++i) {
                const double* grow = g + static_cast<std::size_t>(i) * c;
                double* drow = dr + static_cast<std::size_t>(gid[i]) * c;
                for (int j = 0; j < c; ++j) drow[j] += grow[j];
            }
        });
    }
    return out;
}

Tensor reduce_sum(const Tensor& a) {
    const bool track = tracking(a);
    Tensor out = make_output({1}, track);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i];
    out.data()[0] = acc;
    if (track) {
        Tensor av = a, ov = out;
        record([av, ov]() mutable {
            const double g = ov.grad_data()[0];
            double* da = av.grad_data();
            for (std::size_t i = 0; i < av.size(); ++i) da[i] += g;
        });
    }
    return out;
}

namespace {
std::vector<int> single_group(int rows) { return std::vector<int>(rows, 0); }
}

Tensor reduce_mean_rows(const Tensor& a) {
    check_matrix(a, "reduce_mean_rows");
    return group_mean_rows(a, single_group(a.rows()), 1);
}

Tensor reduce_max_rows(const Tensor& a) {
    check_matrix(a, "reduce_max_rows");
    return group_max_rows(a, single_group(a.rows()), 1);
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    check_matrix(logits, "softmax_cross_entropy");
    const int b = logits.rows(), k = logits.cols();
    if (b < 1) fail(Error::Code::invalid_argument, "softmax_cross_entropy: empty batch");
    if (static_cast<int>(labels.size()) != b) {
        fail(Error::Code::invalid_argument,
             "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                 std::to_string(b) + " logit rows");
    }
    for (int i = 0; i < b; ++i) {
        if (labels[i] < 0 || labels[i] >= k) {
            fail(Error::Code::invalid_argument,
                 "softmax_cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                     std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
        }
    }
    const bool track = tracking(logits);
    Tensor out = make_output({1}, track);
    std::vector<double> probs(static_cast<std::size_t>(b) * k);
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        const double* row = logits.data() + static_cast<std::size_t>(i) * k;
        double m = row[0];
        for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
        double z = 0.0;
        for (int j = 0; j < k; ++j) z += std::exp(row[j] - m);
        const double lse = m + std::log(z);
        loss += lse - row[labels[i]];
        for (int j = 0; j < k; ++j) {
            probs[static_cast<std::size_t>(i) * k + j] = std::exp(row[j] - m) / z;
        }
    }
    out.data()[0] = loss / b;
    if (track) {
        Tensor lv = logits, ov = out;
        std::vector<int> lab = labels;
        record([lv, ov, probs, lab, b, k]() mutable {
            const double g = ov.grad_data()[0];
            double* dl = lv.grad_data();
            const double inv_b = 1.0 / b;
            for (int i = 0; i < b; ++i) {
                for (int j = 0; j < k; ++j) {
                    const double p = probs[static_cast<std::size_t>(i) * k + j];
                    const double y = (j == lab[i]) ? 1.0 : 0.0;
                    dl[static_cast<std::size_t>(i) * k + j] += g * (p - y) * inv_b;
                }
            }
        });
    }
    return out;
}

}  // namespace ops
}  // namespace cognn
