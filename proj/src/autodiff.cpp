#include "autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace cdln {

namespace {

// index of the last length-column of a [C,L] tensor containing any nonzero,
// plus one; 0 when the tensor is all zero. Used to skip work on the zero
// suffix that padded essay signals carry. Exact: only skips actual zeros.
std::size_t nonzero_cols(const Tensor& m) {
    const std::size_t C = m.dim(0), L = m.dim(1);
    for (std::size_t col = L; col > 0; --col) {
        for (std::size_t c = 0; c < C; ++c)
            if (m.at(c, col - 1) != 0.0) return col;
    }
    return 0;
}

}  // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "relu") return Activation::relu;
    fail(errc::config, "unknown activation kind: '" + name + "'");
}

GradSink::GradSink(std::span<Parameter* const> params) {
    params_.assign(params.begin(), params.end());
    buffers_.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        buffers_.push_back(Tensor::zeros(params_[i]->value.shape()));
        index_[params_[i]] = i;
    }
}

Tensor& GradSink::slot(const Parameter* p) {
    auto it = index_.find(p);
    if (it == index_.end()) fail(errc::contract, "gradient sink has no slot for parameter");
    return buffers_[it->second];
}

void GradSink::flush_into_params() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        double* dst = params_[i]->grad.data();
        const double* src = buffers_[i].data();
        for (std::size_t k = 0; k < buffers_[i].size(); ++k) dst[k] += src[k];
    }
}

void GradSink::clear() {
    for (Tensor& t : buffers_) t.fill(0.0);
}

Tape::NodeId Tape::push(Tensor value, std::function<void(Tape&)> back, Parameter* bound) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back), bound});
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::constant(Tensor v) { return push(std::move(v)); }

Tape::NodeId Tape::param(Parameter& p) { return push(p.value, {}, &p); }

Tape::NodeId Tape::linear(NodeId Wid, NodeId xid, NodeId bid) {
    const Tensor& W = value(Wid);
    const Tensor& x = value(xid);
    const Tensor& b = value(bid);
    if (W.rank() != 2 || x.rank() != 1 || b.rank() != 1 || W.dim(1) != x.dim(0) ||
        W.dim(0) != b.dim(0))
        fail(errc::dimension, "linear: shapes do not conform: W " + W.shape_str() + ", x " +
                                  x.shape_str() + ", b " + b.shape_str());
    const std::size_t m = W.dim(0), n = W.dim(1);
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        const double* wrow = W.data() + i * n;
        const double* xv = x.data();
        double acc = b[i];
        for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * xv[j];
        out[i] = acc;
    }
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, Wid, xid, bid, m, n](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& W = t.value(Wid);
        const Tensor& x = t.value(xid);
        Tensor& gW = t.grad_mut(Wid);
        Tensor& gx = t.grad_mut(xid);
        Tensor& gb = t.grad_mut(bid);
        for (std::size_t i = 0; i < m; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            gb[i] += gi;
            double* gwrow = gW.data() + i * n;
            const double* wrow = W.data() + i * n;
            double* gxv = gx.data();
            const double* xv = x.data();
            for (std::size_t j = 0; j < n; ++j) {
                gwrow[j] += gi * xv[j];
                gxv[j] += gi * wrow[j];
            }
        }
    };
    return self;
}

Tape::NodeId Tape::activation(Activation kind, NodeId xid) {
    const Tensor& x = value(xid);
    Tensor out(x.shape());
    switch (kind) {
    case Activation::tanh:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
        break;
    case Activation::relu:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
        break;
    }
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid, kind](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& gx = t.grad_mut(xid);
        switch (kind) {
        case Activation::tanh:
            for (std::size_t i = 0; i < y.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < y.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] > 0.0 ? g[i] : 0.0;
            break;
        }
    };
    return self;
}

Tape::NodeId Tape::conv1d(NodeId sid, NodeId kid, std::size_t stride, Padding padding) {
    const Tensor& sig = value(sid);
    const Tensor& ker = value(kid);
    if (sig.rank() != 2 || ker.rank() != 3)
        fail(errc::dimension, "conv1d: expected signal [C_in,L] and kernels [C_out,C_in,K], got " +
                                  sig.shape_str() + " and " + ker.shape_str());
    if (ker.dim(1) != sig.dim(0))
        fail(errc::dimension, "conv1d: kernel input channels " + std::to_string(ker.dim(1)) +
                                  " do not match signal channels " + std::to_string(sig.dim(0)));
    if (stride < 1) fail(errc::contract, "conv1d: stride must be >= 1");
    const std::size_t c_in = sig.dim(0), L = sig.dim(1);
    const std::size_t c_out = ker.dim(0), K = ker.dim(2);

    std::size_t l_out, pad_left;
    if (padding == Padding::valid) {
        if (K > L)
            fail(errc::dimension, "conv1d: kernel length " + std::to_string(K) +
                                      " exceeds signal length " + std::to_string(L));
        l_out = (L - K) / stride + 1;
        pad_left = 0;
    } else {
        l_out = (L + stride - 1) / stride;
        std::size_t span = (l_out - 1) * stride + K;
        std::size_t pad_total = span > L ? span - L : 0;
        pad_left = pad_total / 2;
    }

    // cross-correlation (no kernel flip): with learned kernels this is
    // equivalent to true convolution up to reparameterization
    Tensor out({c_out, l_out});
    const std::size_t sig_nz = nonzero_cols(sig);
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t t = 0; t < l_out; ++t) {
            const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * stride) -
                                         static_cast<std::ptrdiff_t>(pad_left);
            if (sig_nz == 0 || start >= static_cast<std::ptrdiff_t>(sig_nz)) continue;
            double acc = 0.0;
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                const double* kr = ker.data() + (co * c_in + ci) * K;
                const double* sr = sig.data() + ci * L;
                const std::size_t k_lo =
                    start < 0 ? static_cast<std::size_t>(-start) : 0;
                const std::size_t k_hi = std::min<std::size_t>(
                    K, static_cast<std::size_t>(static_cast<std::ptrdiff_t>(sig_nz) - start));
                for (std::size_t k = k_lo; k < k_hi; ++k)
                    acc += kr[k] * sr[static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(k))];
            }
            out.at(co, t) = acc;
        }
    }

    NodeId self = push(std::move(out));
    nodes_[self].back = [self, sid, kid, stride, pad_left](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& sig = t.value(sid);
        const Tensor& ker = t.value(kid);
        Tensor& gsig = t.grad_mut(sid);
        Tensor& gker = t.grad_mut(kid);
        const std::size_t c_in = sig.dim(0), L = sig.dim(1);
        const std::size_t c_out = ker.dim(0), K = ker.dim(2);
        const std::size_t l_out = g.dim(1);
        const std::size_t g_nz = nonzero_cols(g);
        for (std::size_t co = 0; co < c_out; ++co) {
            for (std::size_t t_out = 0; t_out < g_nz && t_out < l_out; ++t_out) {
                const double gv = g.at(co, t_out);
                if (gv == 0.0) continue;
                const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t_out * stride) -
                                             static_cast<std::ptrdiff_t>(pad_left);
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    const double* kr = ker.data() + (co * c_in + ci) * K;
                    double* gkr = gker.data() + (co * c_in + ci) * K;
                    const double* sr = sig.data() + ci * L;
                    double* gsr = gsig.data() + ci * L;
                    const std::size_t k_lo = start < 0 ? static_cast<std::size_t>(-start) : 0;
                    const std::size_t k_hi = std::min<std::size_t>(
                        K,
                        static_cast<std::size_t>(static_cast<std::ptrdiff_t>(L) - start));
                    for (std::size_t k = k_lo; k < k_hi; ++k) {
                        const std::size_t pos =
                            static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(k));
                        gkr[k] += gv * sr[pos];
                        gsr[pos] += gv * kr[k];
                    }
                }
            }
        }
    };
    return self;
}

Tape::NodeId Tape::avgpool1d(NodeId xid, std::size_t window, std::size_t stride) {
    const Tensor& x = value(xid);
    if (x.rank() != 2)
        fail(errc::dimension, "avgpool1d: expected [C,L] input, got " + x.shape_str());
    if (window < 1) fail(errc::contract, "avgpool1d: window must be >= 1");
    if (stride < 1) fail(errc::contract, "avgpool1d: stride must be >= 1");
    const std::size_t C = x.dim(0), L = x.dim(1);
    if (window > L)
        fail(errc::dimension, "avgpool1d: window " + std::to_string(window) +
                                  " exceeds signal length " + std::to_string(L));
    const std::size_t l_out = (L - window) / stride + 1;
    const double inv = 1.0 / static_cast<double>(window);
    Tensor out({C, l_out});
    for (std::size_t c = 0; c < C; ++c) {
        const double* row = x.data() + c * L;
        for (std::size_t t = 0; t < l_out; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < window; ++k) acc += row[t * stride + k];
            out.at(c, t) = acc * inv;
        }
    }
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid, window, stride, inv](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        const std::size_t C = g.dim(0), l_out = g.dim(1), L = gx.dim(1);
        const std::size_t g_nz = nonzero_cols(g);
        for (std::size_t c = 0; c < C; ++c) {
            const double* grow = g.data() + c * l_out;
            double* gxrow = gx.data() + c * L;
            for (std::size_t t = 0; t < g_nz && t < l_out; ++t) {
                const double gv = grow[t] * inv;
                if (gv == 0.0) continue;
                for (std::size_t k = 0; k < window; ++k) gxrow[t * stride + k] += gv;
            }
        }
    };
    return self;
}

Tape::NodeId Tape::pad1d(NodeId xid, std::size_t left, std::size_t right) {
    const Tensor& x = value(xid);
    if (x.rank() != 2) fail(errc::dimension, "pad1d: expected [C,L] input, got " + x.shape_str());
    if (left == 0 && right == 0) return xid;
    const std::size_t C = x.dim(0), L = x.dim(1);
    Tensor out({C, L + left + right});
    for (std::size_t c = 0; c < C; ++c)
        std::copy_n(x.data() + c * L, L, out.data() + c * (L + left + right) + left);
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid, left](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        const std::size_t C = gx.dim(0), L = gx.dim(1), Lp = g.dim(1);
        for (std::size_t c = 0; c < C; ++c) {
            const double* grow = g.data() + c * Lp + left;
            double* gxrow = gx.data() + c * L;
            for (std::size_t i = 0; i < L; ++i) gxrow[i] += grow[i];
        }
    };
    return self;
}

Tape::NodeId Tape::dropout(NodeId xid, double rate, bool training, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0)
        fail(errc::config, "dropout: rate must lie in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return xid;  // identity, bit-exact
    const Tensor& x = value(xid);
    Rng rng(seed);
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.size());
    for (double& m : mask) m = rng.unit() < rate ? 0.0 : keep_scale;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * mask[i];
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid, mask = std::move(mask)](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    };
    return self;
}

Tape::NodeId Tape::add(NodeId aid, NodeId bid) {
    const Tensor& a = value(aid);
    const Tensor& b = value(bid);
    if (!a.same_shape(b))
        fail(errc::dimension, "add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, aid, bid](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_mut(aid);
        Tensor& gb = t.grad_mut(bid);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    };
    return self;
}

Tape::NodeId Tape::mul(NodeId aid, NodeId bid) {
    const Tensor& a = value(aid);
    const Tensor& b = value(bid);
    if (!a.same_shape(b))
        fail(errc::dimension, "mul: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, aid, bid](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& a = t.value(aid);
        const Tensor& b = t.value(bid);
        Tensor& ga = t.grad_mut(aid);
        Tensor& gb = t.grad_mut(bid);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * b[i];
            gb[i] += g[i] * a[i];
        }
    };
    return self;
}

Tape::NodeId Tape::axpb(NodeId xid, double a, double b) {
    const Tensor& x = value(xid);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b;
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid, a](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += a * g[i];
    };
    return self;
}

Tape::NodeId Tape::dot(NodeId aid, NodeId bid) {
    const Tensor& a = value(aid);
    const Tensor& b = value(bid);
    if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size())
        fail(errc::dimension, "dot: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    NodeId self = push(Tensor::scalar(acc));
    nodes_[self].back = [self, aid, bid](Tape& t) {
        const double g = t.grad(self)[0];
        if (g == 0.0) return;
        const Tensor& a = t.value(aid);
        const Tensor& b = t.value(bid);
        Tensor& ga = t.grad_mut(aid);
        Tensor& gb = t.grad_mut(bid);
        for (std::size_t i = 0; i < a.size(); ++i) {
            ga[i] += g * b[i];
            gb[i] += g * a[i];
        }
    };
    return self;
}

Tape::NodeId Tape::sum(NodeId xid) {
    const Tensor& x = value(xid);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
    NodeId self = push(Tensor::scalar(acc));
    nodes_[self].back = [self, xid](Tape& t) {
        const double g = t.grad(self)[0];
        if (g == 0.0) return;
        Tensor& gx = t.grad_mut(xid);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    };
    return self;
}

Tape::NodeId Tape::concat(std::span<const NodeId> parts) {
    if (parts.empty()) fail(errc::contract, "concat: no inputs");
    std::size_t total = 0;
    for (NodeId id : parts) {
        if (value(id).rank() != 1)
            fail(errc::dimension, "concat: inputs must be vectors, got " + value(id).shape_str());
        total += value(id).size();
    }
    Tensor out({total});
    std::size_t off = 0;
    for (NodeId id : parts) {
        const Tensor& v = value(id);
        std::copy_n(v.data(), v.size(), out.data() + off);
        off += v.size();
    }
    std::vector<NodeId> ids(parts.begin(), parts.end());
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, ids = std::move(ids)](Tape& t) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (NodeId id : ids) {
            Tensor& gx = t.grad_mut(id);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[off + i];
            off += gx.size();
        }
    };
    return self;
}

Tape::NodeId Tape::slice(NodeId xid, std::size_t offset, std::size_t len) {
    const Tensor& x = value(xid);
    if (x.rank() != 1) fail(errc::dimension, "slice: input must be a vector");
    if (offset + len > x.size())
        fail(errc::contract, "slice: range [" + std::to_string(offset) + "," +
                                 std::to_string(offset + len) + ") exceeds length " +
                                 std::to_string(x.size()));
    Tensor out({len});
    std::copy_n(x.data() + offset, len, out.data());
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid, offset](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
    };
    return self;
}

Tape::NodeId Tape::rows(NodeId mid, std::vector<std::size_t> indices) {
    const Tensor& m = value(mid);
    if (m.rank() != 2) fail(errc::dimension, "rows: input must be a matrix");
    if (indices.empty()) fail(errc::contract, "rows: no indices");
    const std::size_t E = m.dim(1);
    for (std::size_t r : indices)
        if (r >= m.dim(0))
            fail(errc::contract, "rows: index " + std::to_string(r) + " out of range [0," +
                                     std::to_string(m.dim(0)) + ")");
    Tensor out({indices.size(), E});
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy_n(m.data() + indices[i] * E, E, out.data() + i * E);
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, mid, idx = std::move(indices), E](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gm = t.grad_mut(mid);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double* src = g.data() + i * E;
            double* dst = gm.data() + idx[i] * E;
            for (std::size_t j = 0; j < E; ++j) dst[j] += src[j];
        }
    };
    return self;
}

Tape::NodeId Tape::mean_rows(NodeId mid) {
    const Tensor& m = value(mid);
    if (m.rank() != 2) fail(errc::dimension, "mean_rows: input must be a matrix");
    const std::size_t T = m.dim(0), E = m.dim(1);
    const double inv = 1.0 / static_cast<double>(T);
    Tensor out({E});
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t j = 0; j < E; ++j) out[j] += m.at(i, j) * inv;
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, mid, T, E, inv](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gm = t.grad_mut(mid);
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t j = 0; j < E; ++j) gm.at(i, j) += g[j] * inv;
    };
    return self;
}

Tape::NodeId Tape::flatten(NodeId xid) {
    const Tensor& x = value(xid);
    if (x.rank() == 1) return xid;
    Tensor out({x.size()}, std::vector<double>(x.data(), x.data() + x.size()));
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
    return self;
}

Tape::NodeId Tape::as_channels(NodeId xid, std::size_t channels) {
    const Tensor& x = value(xid);
    if (x.rank() != 1) fail(errc::dimension, "as_channels: input must be a vector");
    if (channels == 0 || x.size() % channels != 0)
        fail(errc::dimension, "as_channels: length " + std::to_string(x.size()) +
                                  " not divisible into " + std::to_string(channels) + " channels");
    Tensor out({channels, x.size() / channels},
               std::vector<double>(x.data(), x.data() + x.size()));
    NodeId self = push(std::move(out));
    nodes_[self].back = [self, xid](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g.data()[i];
    };
    return self;
}

void Tape::backward(NodeId loss, GradSink* sink) {
    if (value(loss).size() != 1)
        fail(errc::contract, "backward: loss must be scalar, got shape " + value(loss).shape_str());
    for (Node& node : nodes_) {
        if (node.grad.empty())
            node.grad = Tensor::zeros(node.value.shape());
        else
            node.grad.fill(0.0);
    }
    grad_mut(loss)[0] = 1.0;
    for (std::int32_t i = loss; i >= 0; --i) {
        Node& node = nodes_[static_cast<std::size_t>(i)];
        if (node.back) node.back(*this);
    }
    for (Node& node : nodes_) {
        if (!node.bound) continue;
        if (sink) {
            Tensor& slot = sink->slot(node.bound);
            for (std::size_t k = 0; k < node.grad.size(); ++k) slot[k] += node.grad[k];
        } else {
            for (std::size_t k = 0; k < node.grad.size(); ++k) node.bound->grad[k] += node.grad[k];
        }
    }
}

}  // namespace cdln
