#include "ers/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ers/rng.hpp"

namespace ers::data {

namespace {

constexpr int kFormatVersion = 1;
constexpr std::size_t kMaxPlacementAttempts = 10000;

std::vector<double> unit_direction(Rng& rng, std::size_t d) {
    while (true) {
        std::vector<double> v(d);
        double sq = 0.0;
        for (double& x : v) {
            x = rng.normal();
            sq += x * x;
        }
        const double norm = std::sqrt(sq);
        if (norm < 1e-6) continue;
        for (double& x : v) x /= norm;
        return v;
    }
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dd = a[i] - b[i];
        sq += dd * dd;
    }
    return std::sqrt(sq);
}

// Random point at `radius` from `origin`, at least `min_gap` away from every
// row of `placed`.
std::vector<double> place_center(Rng& rng, const std::vector<double>& origin,
                                 double radius, double min_gap,
                                 const std::vector<std::vector<double>>& placed,
                                 const char* what) {
    for (std::size_t attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        std::vector<double> c = unit_direction(rng, origin.size());
        for (std::size_t i = 0; i < c.size(); ++i)
            c[i] = origin[i] + radius * c[i];
        bool ok = true;
        for (const auto& other : placed) {
            if (distance(c, other) < min_gap) {
                ok = false;
                break;
            }
        }
        if (ok) return c;
    }
    throw DomainError(std::string("generate_dataset: could not place ") +
                      what + " centers with the requested spacing; lower the "
                      "count or raise the dimension");
}

}  // namespace

std::vector<double> HierarchicalDataset::sample(std::size_t i) const {
    const std::size_t d = d_in;
    std::vector<double> out(d);
    for (std::size_t c = 0; c < d; ++c) out[c] = samples.at(i, c);
    return out;
}

std::string HierarchicalDataset::serialize() const {
    std::string out = "ERSDATA " + std::to_string(kFormatVersion) + " " +
                      std::to_string(n_super) + " " +
                      std::to_string(n_sub_per_super) + " " +
                      std::to_string(samples_per_sub) + " " +
                      std::to_string(d_in) + " " + format_double(separation) +
                      " " + format_double(sub_spread) + " " +
                      std::to_string(seed) + "\n";
    for (std::size_t i = 0; i < size(); ++i) {
        for (std::size_t c = 0; c < d_in; ++c) {
            out += format_double(samples.at(i, c));
            out += " ";
        }
        out += std::to_string(super_labels[i]);
        out += " ";
        out += std::to_string(sub_labels[i]);
        out += "\n";
    }
    return out;
}

std::uint64_t HierarchicalDataset::digest() const {
    const std::string text = serialize();
    return fnv1a64(text.data(), text.size());
}

HierarchicalDataset generate_dataset(std::size_t n_super,
                                     std::size_t n_sub_per_super,
                                     std::size_t d_in,
                                     std::size_t samples_per_sub,
                                     double separation, double sub_spread,
                                     std::uint64_t seed) {
    if (n_super < 1 || n_sub_per_super < 1 || d_in < 1 || samples_per_sub < 1)
        throw DomainError("generate_dataset: all counts must be >= 1");
    if (!(separation > sub_spread && sub_spread > 0.0))
        throw DomainError(
            "generate_dataset: require separation > sub_spread > 0");

    HierarchicalDataset ds;
    ds.n_super = n_super;
    ds.n_sub_per_super = n_sub_per_super;
    ds.samples_per_sub = samples_per_sub;
    ds.d_in = d_in;
    ds.separation = separation;
    ds.sub_spread = sub_spread;
    ds.seed = seed;

    Rng rng(seed, "dataset");
    const std::vector<double> origin(d_in, 0.0);

    std::vector<std::vector<double>> super_centers;
    for (std::size_t s = 0; s < n_super; ++s) {
        super_centers.push_back(place_center(rng, origin, separation,
                                             separation, super_centers,
                                             "superclass"));
    }

    std::vector<std::vector<double>> sub_centers;  // [n_super * n_sub]
    for (std::size_t s = 0; s < n_super; ++s) {
        std::vector<std::vector<double>> siblings;
        for (std::size_t b = 0; b < n_sub_per_super; ++b) {
            siblings.push_back(place_center(rng, super_centers[s], sub_spread,
                                            sub_spread, siblings, "subclass"));
        }
        for (auto& c : siblings) sub_centers.push_back(std::move(c));
    }

    const std::size_t total = n_super * n_sub_per_super * samples_per_sub;
    ds.samples = Tensor::zeros({total, d_in});
    ds.super_labels.resize(total);
    ds.sub_labels.resize(total);
    const double sigma = sub_spread / 4.0;
    std::size_t idx = 0;
    for (std::size_t s = 0; s < n_super; ++s) {
        for (std::size_t b = 0; b < n_sub_per_super; ++b) {
            const std::vector<double>& center =
                sub_centers[s * n_sub_per_super + b];
            for (std::size_t j = 0; j < samples_per_sub; ++j, ++idx) {
                for (std::size_t c = 0; c < d_in; ++c)
                    ds.samples.at(idx, c) = center[c] + sigma * rng.normal();
                ds.super_labels[idx] = static_cast<std::uint32_t>(s);
                ds.sub_labels[idx] =
                    static_cast<std::uint32_t>(s * n_sub_per_super + b);
            }
        }
    }
    return ds;
}

void save_dataset(const HierarchicalDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_dataset: cannot open '" + path + "'");
    const std::string text = ds.serialize();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("save_dataset: write failed for '" + path + "'");
}

HierarchicalDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_dataset: cannot open '" + path + "'");
    std::string magic;
    int version = -1;
    HierarchicalDataset ds;
    in >> magic >> version;
    if (!in || magic != "ERSDATA")
        throw IoError("load_dataset: '" + path + "' is not a dataset file");
    if (version != kFormatVersion)
        throw IoError("load_dataset: unsupported format version " +
                      std::to_string(version));
    in >> ds.n_super >> ds.n_sub_per_super >> ds.samples_per_sub >> ds.d_in >>
        ds.separation >> ds.sub_spread >> ds.seed;
    if (!in) throw IoError("load_dataset: malformed header in '" + path + "'");
    const std::size_t total =
        ds.n_super * ds.n_sub_per_super * ds.samples_per_sub;
    ds.samples = Tensor::zeros({total, ds.d_in});
    ds.super_labels.resize(total);
    ds.sub_labels.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t c = 0; c < ds.d_in; ++c) in >> ds.samples.at(i, c);
        in >> ds.super_labels[i] >> ds.sub_labels[i];
        if (!in)
            throw IoError("load_dataset: truncated sample " +
                          std::to_string(i) + " in '" + path + "'");
        if (ds.super_labels[i] >= ds.n_super ||
            ds.sub_labels[i] >= ds.n_sub_total() ||
            ds.sub_labels[i] / ds.n_sub_per_super != ds.super_labels[i])
            throw IoError("load_dataset: inconsistent labels at sample " +
                          std::to_string(i) + " in '" + path + "'");
    }
    return ds;
}

std::vector<double> augment(const std::vector<double>& x,
                            const AugmentationSpec& spec,
                            std::size_t sample_index, std::uint64_t draw) {
    if (spec.sigma < 0.0) throw DomainError("augment: sigma must be >= 0");
    if (spec.sigma == 0.0) return x;
    const std::uint64_t key[2] = {static_cast<std::uint64_t>(sample_index),
                                  draw};
    Rng rng(fnv1a64(key, sizeof(key), spec.seed), "augment");
    std::vector<double> out = x;
    for (double& v : out) v += spec.sigma * rng.normal();
    return out;
}

}  // namespace ers::data
