#include "ers/predictions.hpp"

#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "ers/model.hpp"

namespace ers::evalkit {

PredictionSet predictions_from_checkpoint(
    const pipeline::Checkpoint& c, const data::HierarchicalDataset& dataset) {
    if (!c.has_head)
        throw DomainError(
            "predictions_from_checkpoint: checkpoint has no cluster head");
    PredictionSet out;
    out.checkpoint_id = c.member_id;
    const Tensor emb = model::encode_batch(c.encoder, dataset.samples);
    out.probs = model::predict_probs_batch(c.head, emb);
    out.argmax.resize(out.probs.rows());
    for (std::size_t i = 0; i < out.probs.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < out.probs.cols(); ++j)
            if (out.probs.at(i, j) > out.probs.at(i, best)) best = j;
        out.argmax[i] = static_cast<std::uint32_t>(best);
    }
    return out;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t v : counts) t += v;
    return t;
}

ConfusionMatrix ConfusionMatrix::zeros(std::size_t rows, std::size_t cols) {
    ConfusionMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.counts.assign(rows * cols, 0);
    return m;
}

std::uint64_t l1_distance(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ShapeError("l1_distance: confusion shapes differ");
    std::uint64_t d = 0;
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        const std::uint64_t x = a.counts[i], y = b.counts[i];
        d += x > y ? x - y : y - x;
    }
    return d;
}

HungarianResult hungarian_match(const ConfusionMatrix& raw) {
    if (raw.rows != raw.cols)
        throw ShapeError("hungarian_match: confusion matrix must be square, "
                         "got " +
                         std::to_string(raw.rows) + "x" +
                         std::to_string(raw.cols));
    const std::size_t n = raw.rows;
    if (n == 0) throw ShapeError("hungarian_match: empty matrix");

    // Assignment of columns (clusters) to rows (labels) minimizing the
    // negated counts; potentials formulation, O(n^3).
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    const auto cost = [&raw](std::size_t i, std::size_t j) {
        // row i = cluster i, column j = label j
        return -static_cast<std::int64_t>(raw.at(j, i));
    };
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    HungarianResult result;
    result.permutation.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        // cluster p[j]-1 is assigned label j-1
        result.permutation[p[j] - 1] = static_cast<std::uint32_t>(j - 1);
    }
    for (std::size_t c = 0; c < n; ++c)
        result.matched += raw.at(result.permutation[c], c);
    const std::uint64_t total = raw.total();
    result.accuracy =
        total == 0 ? 0.0
                   : static_cast<double>(result.matched) /
                         static_cast<double>(total);
    return result;
}

ConfusionMatrix raw_confusion(const PredictionSet& preds,
                              const std::vector<std::uint32_t>& labels,
                              std::size_t n_labels) {
    if (labels.size() != preds.size())
        throw ShapeError("raw_confusion: label count " +
                         std::to_string(labels.size()) +
                         " does not match sample count " +
                         std::to_string(preds.size()));
    ConfusionMatrix m = ConfusionMatrix::zeros(n_labels, preds.n_clusters());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] >= n_labels)
            throw DomainError("raw_confusion: label out of range at sample " +
                              std::to_string(i));
        ++m.at(labels[i], preds.argmax[i]);
    }
    return m;
}

void map_to_labels(PredictionSet& preds,
                   const std::vector<std::uint32_t>& labels,
                   std::size_t n_labels) {
    const ConfusionMatrix raw = raw_confusion(preds, labels, n_labels);
    const std::size_t n_clusters = preds.n_clusters();
    const std::size_t dim = std::max(n_labels, n_clusters);
    ConfusionMatrix square = ConfusionMatrix::zeros(dim, dim);
    for (std::size_t r = 0; r < n_labels; ++r)
        for (std::size_t c = 0; c < n_clusters; ++c)
            square.at(r, c) = raw.at(r, c);
    const HungarianResult h = hungarian_match(square);
    preds.mapping.assign(h.permutation.begin(),
                         h.permutation.begin() +
                             static_cast<long>(n_clusters));
    preds.mapped_accuracy =
        preds.size() == 0 ? 0.0
                          : static_cast<double>(h.matched) /
                                static_cast<double>(preds.size());
}

ConfusionMatrix confusion_matrix(const PredictionSet& preds,
                                 const std::vector<std::uint32_t>& labels,
                                 std::size_t n_labels) {
    if (!preds.mapped())
        throw DomainError("confusion_matrix: prediction set is unmapped");
    if (labels.size() != preds.size())
        throw ShapeError("confusion_matrix: label count mismatch");
    ConfusionMatrix m = ConfusionMatrix::zeros(n_labels, n_labels);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const std::uint32_t mapped = preds.mapped_label(i);
        if (labels[i] >= n_labels || mapped >= n_labels)
            throw DomainError(
                "confusion_matrix: label out of range at sample " +
                std::to_string(i));
        ++m.at(labels[i], mapped);
    }
    return m;
}

std::string serialize_predictions(const PredictionSet& preds) {
    std::string text = "ERSPREDS 1\n";
    text += "checkpoint " + std::to_string(preds.checkpoint_id) + "\n";
    text += "shape " + std::to_string(preds.size()) + " " +
            std::to_string(preds.n_clusters()) + "\n";
    if (preds.mapped()) {
        text += "mapping";
        for (std::uint32_t m : preds.mapping)
            text += " " + std::to_string(m);
        text += "\n";
        text += "accuracy " + format_double(preds.mapped_accuracy) + "\n";
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        text += std::to_string(i);
        for (std::size_t j = 0; j < preds.n_clusters(); ++j) {
            text += " ";
            text += format_double(preds.probs.at(i, j));
        }
        text += " " + std::to_string(preds.argmax[i]);
        text += " " + (preds.mapped()
                           ? std::to_string(preds.mapped_label(i))
                           : std::string("-"));
        text += "\n";
    }
    return text;
}

void save_predictions(const PredictionSet& preds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_predictions: cannot open '" + path + "'");
    const std::string text = serialize_predictions(preds);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw IoError("save_predictions: write failed for '" + path + "'");
}

PredictionSet load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_predictions: cannot open '" + path + "'");
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (!in || magic != "ERSPREDS")
        throw IoError("load_predictions: '" + path +
                      "' is not a predictions file");
    if (version != 1)
        throw IoError("load_predictions: unsupported version " +
                      std::to_string(version));
    PredictionSet preds;
    std::string key;
    std::size_t n_samples = 0, n_clusters = 0;
    in >> key >> preds.checkpoint_id;
    if (!in || key != "checkpoint")
        throw IoError("load_predictions: malformed header in '" + path + "'");
    in >> key >> n_samples >> n_clusters;
    if (!in || key != "shape")
        throw IoError("load_predictions: malformed header in '" + path + "'");
    in >> key;
    if (key == "mapping") {
        preds.mapping.resize(n_clusters);
        for (auto& m : preds.mapping) in >> m;
        in >> key >> preds.mapped_accuracy;
        if (!in || key != "accuracy")
            throw IoError("load_predictions: malformed mapping in '" + path +
                          "'");
        in >> key;  // first sample id
    }
    preds.probs = Tensor::zeros({n_samples, n_clusters});
    preds.argmax.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (i > 0) in >> key;  // sample id already consumed for row 0
        std::string mapped_text;
        for (std::size_t j = 0; j < n_clusters; ++j)
            in >> preds.probs.at(i, j);
        in >> preds.argmax[i] >> mapped_text;
        if (!in)
            throw IoError("load_predictions: truncated row " +
                          std::to_string(i) + " in '" + path + "'");
    }
    return preds;
}

}  // namespace ers::evalkit
