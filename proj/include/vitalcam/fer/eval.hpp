#pragma once

#include <array>
#include <functional>
#include <vector>

#include "vitalcam/fer/model.hpp"

namespace vitalcam::fer {

// Row-normalized confusion matrix: rows are true classes, columns predicted.
struct ConfusionMatrix {
    std::array<std::array<double, 7>, 7> rows{};
    std::array<size_t, 7> support{};

    double at(int true_class, int predicted) const {
        return rows[static_cast<size_t>(true_class)][static_cast<size_t>(predicted)];
    }
};

struct EvalResult {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    size_t samples = 0;
};

using Predictor = std::function<int(const GrayPlane&, size_t index)>;

// Evaluates an arbitrary predictor; `evaluate` below binds it to a model's
// argmax (ties to the lowest class index).
inline EvalResult evaluate_with(const Predictor& predict,
                                const std::vector<GrayPlane>& faces,
                                const std::vector<int>& labels) {
    if (faces.empty() || faces.size() != labels.size())
        throw error(errc::empty_dataset, "dataset is empty or misaligned");
    std::array<std::array<size_t, 7>, 7> counts{};
    size_t correct = 0;
    for (size_t i = 0; i < faces.size(); ++i) {
        const int truth = labels[i];
        if (truth < 0 || truth > 6)
            throw error(errc::bad_label, "label out of range at sample " + std::to_string(i));
        const int pred = predict(faces[i], i);
        if (pred < 0 || pred > 6)
            throw error(errc::bad_label, "prediction out of range at sample " + std::to_string(i));
        ++counts[static_cast<size_t>(truth)][static_cast<size_t>(pred)];
        if (pred == truth) ++correct;
    }

    EvalResult result;
    result.samples = faces.size();
    result.accuracy = static_cast<double>(correct) / static_cast<double>(faces.size());
    for (int t = 0; t < 7; ++t) {
        size_t row_total = 0;
        for (int p = 0; p < 7; ++p) row_total += counts[static_cast<size_t>(t)][static_cast<size_t>(p)];
        result.confusion.support[static_cast<size_t>(t)] = row_total;
        if (row_total == 0) continue;
        for (int p = 0; p < 7; ++p)
            result.confusion.rows[static_cast<size_t>(t)][static_cast<size_t>(p)] =
                static_cast<double>(counts[static_cast<size_t>(t)][static_cast<size_t>(p)]) /
                static_cast<double>(row_total);
    }
    return result;
}

inline EvalResult evaluate(const Model& model, const std::vector<GrayPlane>& faces,
                           const std::vector<int>& labels) {
    return evaluate_with(
        [&model](const GrayPlane& face, size_t) { return classify(model, face).argmax(); },
        faces, labels);
}

}  // namespace vitalcam::fer
