#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lrrid/matrix_prox.hpp"

namespace lrrid {

/// C x n one-hot label matrix with exactly one 1 per column.
class LabelMatrix {
public:
    LabelMatrix() = default;

    /// Throws std::invalid_argument if a label is outside [0, num_classes).
    LabelMatrix(std::span<const int> labels, int num_classes);

    const Matrix& matrix() const { return H_; }
    const std::vector<int>& labels() const { return labels_; }
    int num_classes() const { return static_cast<int>(H_.rows()); }
    std::size_t size() const { return labels_.size(); }

private:
    Matrix H_;
    std::vector<int> labels_;
};

/// Linear map from codes to class scores.
struct ClassifierModel {
    Matrix W;  // C x m
    double eta_ridge = 1.0;
};

/// Ridge regression of the labels on the training codes:
/// W = H X^T (X X^T + eta I)^{-1}. Throws std::invalid_argument if
/// eta_ridge <= 0 or the column counts disagree.
ClassifierModel fit(const Matrix& X_train, const LabelMatrix& H, double eta_ridge);

/// Row index of the largest score in each column of W * X_test; ties go to
/// the lowest class index.
std::vector<int> predict(const ClassifierModel& model, const Matrix& X_test);

/// Fraction of predictions equal to truth. Empty input gives 0.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Plain-text export: a "C m" header, then one line of space-separated
/// values per row of W.
void write_model(std::ostream& out, const ClassifierModel& model);
ClassifierModel read_model(std::istream& in);

}  // namespace lrrid
