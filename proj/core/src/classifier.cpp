#include "lrrid/classifier.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lrrid/errors.hpp"

namespace lrrid {

LabelMatrix::LabelMatrix(std::span<const int> labels, int num_classes)
    : H_(Matrix::Zero(num_classes, static_cast<Eigen::Index>(labels.size()))),
      labels_(labels.begin(), labels.end()) {
    if (num_classes < 1) {
        throw std::invalid_argument("LabelMatrix: need at least one class");
    }
    for (std::size_t j = 0; j < labels.size(); ++j) {
        const int c = labels[j];
        if (c < 0 || c >= num_classes) {
            throw std::invalid_argument("LabelMatrix: label " + std::to_string(c) +
                                        " outside [0, " + std::to_string(num_classes) +
                                        ")");
        }
        H_(c, static_cast<Eigen::Index>(j)) = 1.0;
    }
}

ClassifierModel fit(const Matrix& X_train, const LabelMatrix& H, double eta_ridge) {
    if (!(eta_ridge > 0.0)) {
        throw std::invalid_argument("fit: eta_ridge must be positive");
    }
    if (static_cast<std::size_t>(X_train.cols()) != H.size()) {
        throw std::invalid_argument("fit: code and label column counts differ");
    }
    const auto m = X_train.rows();
    // (X X^T + eta I) W^T = X H^T, the transpose of the normal equations.
    const Matrix gram = X_train * X_train.transpose() + eta_ridge * Matrix::Identity(m, m);
    const Matrix rhs = X_train * H.matrix().transpose();
    ClassifierModel model;
    model.W = solve_spd(gram, rhs).transpose();
    model.eta_ridge = eta_ridge;
    return model;
}

std::vector<int> predict(const ClassifierModel& model, const Matrix& X_test) {
    if (model.W.cols() != X_test.rows()) {
        throw std::invalid_argument("predict: W columns must equal code rows");
    }
    if (model.W.rows() == 0) {
        throw std::invalid_argument("predict: model has no classes");
    }
    const Matrix scores = model.W * X_test;
    std::vector<int> out(static_cast<std::size_t>(scores.cols()));
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < scores.rows(); ++i) {
            if (scores(i, j) > scores(best, j)) best = i;
        }
        out[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("accuracy: prediction and truth lengths differ");
    }
    if (truth.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == truth[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

void write_model(std::ostream& out, const ClassifierModel& model) {
    const auto old_precision = out.precision(17);
    out << model.W.rows() << ' ' << model.W.cols() << '\n';
    for (Eigen::Index i = 0; i < model.W.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.W.cols(); ++j) {
            if (j > 0) out << ' ';
            out << model.W(i, j);
        }
        out << '\n';
    }
    out.precision(old_precision);
    if (!out) throw IoError("write_model: stream write failed");
}

ClassifierModel read_model(std::istream& in) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
        throw IoError("read_model: malformed \"C m\" header");
    }
    ClassifierModel model;
    model.W.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(in >> model.W(i, j))) throw IoError("read_model: truncated matrix body");
        }
    }
    return model;
}

}  // namespace lrrid
