#include "graphleap/tensor.hpp"

#include <cmath>
#include <string>

namespace graphleap {

void require_finite(const FeatureMatrix& m, const char* what) {
    for (float v : m.data) {
        if (!std::isfinite(v)) throw NonFiniteValue(std::string(what) + ": non-finite value");
    }
}

FeatureMatrix PerHeadWeight::to_dense() const {
    FeatureMatrix out(dim(), dim(), 0.0f);
    for (int32_t h = 0; h < heads; ++h) {
        const int32_t base = h * dim_per_head;
        for (int32_t i = 0; i < dim_per_head; ++i)
            for (int32_t j = 0; j < dim_per_head; ++j) out.at(base + i, base + j) = at(h, i, j);
    }
    return out;
}

PerHeadWeight PerHeadWeight::identity(int32_t heads, int32_t dim_per_head) {
    PerHeadWeight w(heads, dim_per_head);
    for (int32_t h = 0; h < heads; ++h)
        for (int32_t i = 0; i < dim_per_head; ++i) w.at(h, i, i) = 1.0f;
    return w;
}

FeatureMatrix matmul(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.cols != b.rows)
        throw ShapeMismatch("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                            " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    FeatureMatrix c(a.rows, b.cols, 0.0f);
    // i-k-j loop: per output element the k-sum still accumulates in ascending
    // order, identical to the naive i-j-k form.
    for (int32_t i = 0; i < a.rows; ++i) {
        const float* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
        float* crow = c.data.data() + static_cast<size_t>(i) * c.cols;
        for (int32_t k = 0; k < a.cols; ++k) {
            const float av = arow[k];
            if (av == 0.0f) continue;
            const float* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
            for (int32_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

FeatureMatrix add(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("add: shapes differ");
    FeatureMatrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

FeatureMatrix identity_matrix(int32_t n) {
    FeatureMatrix m(n, n, 0.0f);
    for (int32_t i = 0; i < n; ++i) m.at(i, i) = 1.0f;
    return m;
}

}  // namespace graphleap
