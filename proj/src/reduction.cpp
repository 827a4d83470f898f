#include "padspace/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"
#include "padspace/rng.hpp"

namespace padspace {

namespace {

constexpr double kGradClip = 4.0;
constexpr double kRepulsionEps = 1e-3;

}  // namespace

AnchorTable AnchorTable::builtin() {
    AnchorTable t;
    t.set("Angry", {-0.51, 0.59, 0.25});
    t.set("Happy", {0.81, 0.51, 0.46});
    t.set("Sad", {-0.63, -0.27, -0.33});
    t.set("Surprise", {0.40, 0.67, -0.13});
    t.set("Anxious", {0.01, 0.59, -0.15});
    t.set("Excited", {0.62, 0.75, 0.38});
    t.set("Alert", {0.49, 0.57, 0.45});
    t.set("Protected", {0.60, -0.22, -0.40});
    t.set("Relaxed", {0.68, -0.46, 0.20});
    t.set("Neutral", {0.00, 0.00, 0.00});
    return t;
}

void AnchorTable::set(const std::string& label, const Pad& pad) {
    entries_[label] = pad;
}

Pad AnchorTable::at(const std::string& label) const {
    const auto it = entries_.find(label);
    if (it == entries_.end()) {
        throw DataError("no anchor for label '" + label + "'");
    }
    return it->second;
}

bool AnchorTable::contains(const std::string& label) const {
    return entries_.count(label) > 0;
}

std::vector<std::string> AnchorTable::labels() const {
    std::vector<std::string> out;
    for (const auto& [label, pad] : entries_) out.push_back(label);
    return out;
}

AnchorTable load_anchors(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() ||
        rows[0] != std::vector<std::string>{"label", "P", "A", "D"}) {
        throw DataError("anchor file header must be 'label,P,A,D': " + path);
    }
    AnchorTable out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 4) {
            throw DataError("bad anchor row " + std::to_string(r + 1) + " in " +
                            path);
        }
        Pad pad(csv::parse_double(rows[r][1], "anchor P"),
                csv::parse_double(rows[r][2], "anchor A"),
                csv::parse_double(rows[r][3], "anchor D"));
        out.set(rows[r][0], pad);
    }
    if (out.entries().empty()) throw DataError("empty anchor file: " + path);
    return out;
}

void save_anchors(const std::string& path, const AnchorTable& anchors) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write anchor file: " + path);
    out << "label,P,A,D\n";
    for (const auto& [label, pad] : anchors.entries()) {
        out << label << ',' << csv::format_g6(pad(0)) << ','
            << csv::format_g6(pad(1)) << ',' << csv::format_g6(pad(2)) << '\n';
    }
}

void ReductionConfig::validate(int n_points) const {
    if (k < 2 || k >= n_points) {
        throw DataError("k must satisfy 2 <= k < N (k=" + std::to_string(k) +
                        ", N=" + std::to_string(n_points) + ")");
    }
    if (min_dist <= 0) throw DataError("min_dist must be > 0");
    if (layout_lr <= 0) throw DataError("layout_lr must be > 0");
    if (anchor_noise_sigma < 0) throw DataError("anchor noise sigma must be >= 0");
    if (epochs < 0) throw DataError("epochs must be >= 0");
    if (negative_sample_rate <= 0) {
        throw DataError("negative_sample_rate must be > 0");
    }
    if (supervision_weight < 0 || supervision_weight > 1) {
        throw DataError("supervision_weight must be in [0, 1]");
    }
    if (anchor_pull < 0) throw DataError("anchor_pull must be >= 0");
}

KnnGraph build_knn(const Eigen::MatrixXd& points, int k) {
    const int n = static_cast<int>(points.rows());
    if (n <= k) {
        throw DataError("build_knn needs N > k (N=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
    }
    if (!points.allFinite()) throw DataError("non-finite embedding values");
    const int dims = static_cast<int>(points.cols());

    KnnGraph graph;
    graph.indices.resize(n, k);
    graph.distances.resize(n, k);

    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(n) - 1);
    for (int i = 0; i < n; ++i) {
        cand.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double sq = 0.0;
            for (int d = 0; d < dims; ++d) {
                const double diff = points(i, d) - points(j, d);
                sq += diff * diff;
            }
            cand.emplace_back(sq, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int r = 0; r < k; ++r) {
            graph.indices(i, r) = cand[static_cast<std::size_t>(r)].second;
            graph.distances(i, r) =
                std::sqrt(cand[static_cast<std::size_t>(r)].first);
        }
    }
    return graph;
}

DirectedMemberships calibrate_fuzzy(const KnnGraph& knn) {
    const int n = knn.size();
    const int k = knn.k();
    const double target = std::log2(static_cast<double>(k));

    DirectedMemberships out;
    out.indices = knn.indices;
    out.weights.resize(n, k);

    for (int i = 0; i < n; ++i) {
        const double rho = knn.distances(i, 0);
        if (knn.distances.row(i).maxCoeff() <= 0.0) {
            // all-zero distances: sigma search cannot apply
            out.degenerate_points.push_back(i);
            out.weights.row(i).setOnes();
            continue;
        }

        auto member_sum = [&](double sigma) {
            double s = 0.0;
            for (int r = 0; r < k; ++r) {
                s += std::exp(-std::max(0.0, knn.distances(i, r) - rho) / sigma);
            }
            return s;
        };

        double lo = 1e-8, hi = 1e4;
        for (int iter = 0; iter < 64; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (member_sum(mid) > target) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        const double sigma = 0.5 * (lo + hi);
        if (std::abs(member_sum(sigma) - target) > 1e-3) {
            // No solution: every neighbor sits at distance rho, so the sum
            // is k for any sigma. Use the uniform solution instead.
            out.weights.row(i).setConstant(target / k);
            continue;
        }
        for (int r = 0; r < k; ++r) {
            out.weights(i, r) =
                std::exp(-std::max(0.0, knn.distances(i, r) - rho) / sigma);
        }
    }
    return out;
}

double FuzzyGraph::weight_between(int qi, int qj) const {
    const int a = std::min(qi, qj);
    const int b = std::max(qi, qj);
    const auto it = std::lower_bound(
        edges.begin(), edges.end(), std::pair<int, int>(a, b),
        [](const FuzzyEdge& e, const std::pair<int, int>& key) {
            return std::pair<int, int>(e.i, e.j) < key;
        });
    if (it != edges.end() && it->i == a && it->j == b) return it->weight;
    return 0.0;
}

FuzzyGraph symmetrize(const DirectedMemberships& memberships) {
    const int n = static_cast<int>(memberships.indices.rows());
    const int k = static_cast<int>(memberships.indices.cols());

    std::map<std::pair<int, int>, std::pair<double, double>> undirected;
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < k; ++r) {
            const int j = memberships.indices(i, r);
            const double w = memberships.weights(i, r);
            const auto key = std::make_pair(std::min(i, j), std::max(i, j));
            auto& slot = undirected[key];
            if (i < j) slot.first = w;
            else slot.second = w;
        }
    }

    FuzzyGraph graph;
    graph.n = n;
    graph.edges.reserve(undirected.size());
    for (const auto& [key, ab] : undirected) {
        const double w = ab.first + ab.second - ab.first * ab.second;
        if (w <= 0.0) continue;
        graph.edges.push_back({key.first, key.second, std::min(w, 1.0)});
    }
    return graph;
}

FuzzyGraph supervise(const FuzzyGraph& graph, const std::vector<int>& label_ids,
                     double w) {
    if (w < 0 || w > 1) throw DataError("supervision weight must be in [0, 1]");
    if (static_cast<int>(label_ids.size()) != graph.n) {
        throw DataError("every node needs a label for supervision");
    }
    for (const int id : label_ids) {
        if (id < 0) throw DataError("unlabeled node in supervised graph");
    }
    FuzzyGraph out;
    out.n = graph.n;
    out.edges.reserve(graph.edges.size());
    for (const auto& e : graph.edges) {
        const bool same = label_ids[static_cast<std::size_t>(e.i)] ==
                          label_ids[static_cast<std::size_t>(e.j)];
        const double scaled = same ? e.weight : e.weight * (1.0 - w);
        if (scaled > 0.0) out.edges.push_back({e.i, e.j, scaled});
    }
    return out;
}

Pad EmbeddingLayout::centroid(const std::string& label) const {
    Pad acc = Pad::Zero();
    int count = 0;
    for (int i = 0; i < size(); ++i) {
        if (labels[static_cast<std::size_t>(i)] == label) {
            acc += coords.row(i).transpose();
            ++count;
        }
    }
    if (count == 0) throw DataError("label '" + label + "' not in layout");
    return acc / count;
}

std::map<std::string, Pad> EmbeddingLayout::centroids() const {
    std::map<std::string, Pad> acc;
    std::map<std::string, int> counts;
    for (int i = 0; i < size(); ++i) {
        const auto& label = labels[static_cast<std::size_t>(i)];
        auto [it, fresh] = acc.try_emplace(label, Pad::Zero());
        it->second += coords.row(i).transpose();
        counts[label] += 1;
    }
    for (auto& [label, sum] : acc) sum /= counts[label];
    return acc;
}

EmbeddingLayout init_anchored(const std::vector<std::string>& clip_ids,
                              const std::vector<std::string>& labels,
                              const AnchorTable& anchors, double noise_sigma,
                              std::uint64_t seed) {
    if (clip_ids.size() != labels.size()) {
        throw DataError("clip ids and labels must align");
    }
    EmbeddingLayout layout;
    layout.clip_ids = clip_ids;
    layout.labels = labels;
    layout.coords.resize(static_cast<Eigen::Index>(labels.size()), 3);
    Rng rng(seed, RngStream::kAnchorNoise);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Pad anchor = anchors.at(labels[i]);  // throws, names the label
        for (int d = 0; d < 3; ++d) {
            layout.coords(static_cast<Eigen::Index>(i), d) =
                anchor(d) + (noise_sigma > 0 ? rng.normal(0.0, noise_sigma) : 0.0);
        }
    }
    return layout;
}

KernelParams fit_kernel(double min_dist) {
    if (min_dist <= 0) throw DataError("min_dist must be > 0");

    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples), ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        const double d = 3.0 * i / (kSamples - 1);
        xs[static_cast<std::size_t>(i)] = d;
        ys[static_cast<std::size_t>(i)] =
            d <= min_dist ? 1.0 : std::exp(-(d - min_dist));
    }

    // Levenberg-Marquardt on the two parameters; residuals at d = 0 are
    // identically zero so the log(d) terms are skipped there.
    double a = 1.0, b = 1.0;
    double lambda = 1e-3;
    auto sum_sq = [&](double pa, double pb) {
        double s = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const double d = xs[static_cast<std::size_t>(i)];
            const double q = 1.0 / (1.0 + pa * std::pow(d, 2.0 * pb));
            const double r = ys[static_cast<std::size_t>(i)] - q;
            s += r * r;
        }
        return s;
    };

    double err = sum_sq(a, b);
    for (int iter = 0; iter < 200; ++iter) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (int i = 1; i < kSamples; ++i) {
            const double d = xs[static_cast<std::size_t>(i)];
            const double p = std::pow(d, 2.0 * b);
            const double denom = 1.0 + a * p;
            const double q = 1.0 / denom;
            const double r = ys[static_cast<std::size_t>(i)] - q;
            // dq/da, dq/db
            const double da = -p / (denom * denom);
            const double db = -2.0 * a * p * std::log(d) / (denom * denom);
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            jtr0 += da * -r;
            jtr1 += db * -r;
        }
        const double m00 = jtj00 * (1.0 + lambda);
        const double m11 = jtj11 * (1.0 + lambda);
        const double det = m00 * m11 - jtj01 * jtj01;
        if (std::abs(det) < 1e-30) break;
        const double step_a = -(m11 * jtr0 - jtj01 * jtr1) / det;
        const double step_b = -(m00 * jtr1 - jtj01 * jtr0) / det;
        const double na = a + step_a;
        const double nb = b + step_b;
        if (na <= 0 || nb <= 0) {
            lambda *= 10.0;
            continue;
        }
        const double nerr = sum_sq(na, nb);
        if (nerr < err) {
            a = na;
            b = nb;
            err = nerr;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (std::abs(step_a) < 1e-12 && std::abs(step_b) < 1e-12) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }

    const double rms = std::sqrt(err / kSamples);
    if (!std::isfinite(err) || rms > 0.1) {
        throw DataError("kernel fit did not converge (rms residual " +
                        csv::format_g6(rms) + ")");
    }
    return {a, b};
}

EmbeddingLayout optimize_layout(const FuzzyGraph& graph,
                                const EmbeddingLayout& init,
                                const AnchorTable& anchors,
                                const KernelParams& kernel,
                                const ReductionConfig& cfg) {
    const int n = init.size();
    if (graph.n != n) throw DataError("layout rows do not match graph nodes");
    if (cfg.epochs == 0) return init;

    EmbeddingLayout layout = init;
    Eigen::MatrixXd& y = layout.coords;

    // Anchor row per point, resolved once.
    Eigen::MatrixXd anchor_rows(n, 3);
    for (int i = 0; i < n; ++i) {
        anchor_rows.row(i) =
            anchors.at(layout.labels[static_cast<std::size_t>(i)]).transpose();
    }

    // Directed edge list, both directions, deterministic order.
    struct DirectedEdge {
        int head;
        int tail;
        double weight;
    };
    std::vector<DirectedEdge> edges;
    edges.reserve(graph.edges.size() * 2);
    for (const auto& e : graph.edges) {
        edges.push_back({e.i, e.j, e.weight});
        edges.push_back({e.j, e.i, e.weight});
    }
    std::sort(edges.begin(), edges.end(), [](const auto& l, const auto& r) {
        return std::tie(l.head, l.tail) < std::tie(r.head, r.tail);
    });
    if (edges.empty()) throw DataError("fuzzy graph has no edges");

    // Neighbor sets for the non-neighbor check on negative samples.
    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
    for (const auto& e : edges) {
        neighbors[static_cast<std::size_t>(e.head)].push_back(e.tail);
    }
    for (auto& list : neighbors) std::sort(list.begin(), list.end());
    auto is_neighbor = [&](int i, int j) {
        const auto& list = neighbors[static_cast<std::size_t>(i)];
        return std::binary_search(list.begin(), list.end(), j);
    };

    double max_w = 0.0;
    for (const auto& e : edges) max_w = std::max(max_w, e.weight);
    std::vector<double> epochs_per_sample(edges.size());
    std::vector<double> next_fire(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        epochs_per_sample[e] = max_w / edges[e].weight;
        next_fire[e] = epochs_per_sample[e];
    }

    Rng rng(cfg.seed, RngStream::kLayout);
    const double a = kernel.a;
    const double b = kernel.b;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double alpha =
            cfg.layout_lr * (1.0 - static_cast<double>(epoch) / cfg.epochs);

        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (next_fire[e] > epoch) continue;
            next_fire[e] += epochs_per_sample[e];
            const int h = edges[e].head;
            const int t = edges[e].tail;

            // attraction: both endpoints move
            {
                double diff[3];
                double dsq = 0.0;
                for (int d = 0; d < 3; ++d) {
                    diff[d] = y(h, d) - y(t, d);
                    dsq += diff[d] * diff[d];
                }
                if (dsq > 0.0) {
                    const double coef = -2.0 * a * b * std::pow(dsq, b - 1.0) /
                                        (1.0 + a * std::pow(dsq, b));
                    for (int d = 0; d < 3; ++d) {
                        const double move =
                            std::clamp(coef * diff[d], -kGradClip, kGradClip) *
                            alpha;
                        y(h, d) += move;
                        y(t, d) -= move;
                    }
                }
            }

            // repulsion against uniform random non-neighbors of the head
            for (int s = 0; s < cfg.negative_sample_rate; ++s) {
                int other = -1;
                for (int attempt = 0; attempt < 8; ++attempt) {
                    const int cand = static_cast<int>(
                        rng.uniform_index(static_cast<std::uint64_t>(n)));
                    if (cand != h && !is_neighbor(h, cand)) {
                        other = cand;
                        break;
                    }
                }
                if (other < 0) continue;
                double diff[3];
                double dsq = 0.0;
                for (int d = 0; d < 3; ++d) {
                    diff[d] = y(h, d) - y(other, d);
                    dsq += diff[d] * diff[d];
                }
                if (dsq > 0.0) {
                    const double coef =
                        2.0 * b /
                        ((kRepulsionEps + dsq) * (1.0 + a * std::pow(dsq, b)));
                    for (int d = 0; d < 3; ++d) {
                        y(h, d) += std::clamp(coef * diff[d], -kGradClip,
                                              kGradClip) *
                                   alpha;
                    }
                } else {
                    // coincident points: push the head off with a full clip
                    for (int d = 0; d < 3; ++d) y(h, d) += kGradClip * alpha;
                }
            }
        }

        if (cfg.anchor_pull > 0.0) {
            const double keep = std::exp(-cfg.anchor_pull * alpha);
            y = anchor_rows + (y - anchor_rows) * keep;
        }

        if (!y.allFinite()) {
            int bad = 0;
            for (int i = 0; i < n; ++i) {
                if (!y.row(i).allFinite()) {
                    bad = i;
                    break;
                }
            }
            throw DataError("non-finite layout coordinate at epoch " +
                            std::to_string(epoch) + ", node " +
                            std::to_string(bad));
        }
    }
    return layout;
}

void save_layout(const std::string& path, const EmbeddingLayout& layout) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write layout file: " + path);
    out << "clip_id,label,P,A,D\n";
    for (int i = 0; i < layout.size(); ++i) {
        out << layout.clip_ids[static_cast<std::size_t>(i)] << ','
            << layout.labels[static_cast<std::size_t>(i)];
        for (int d = 0; d < 3; ++d) {
            out << ',' << csv::format_g6(layout.coords(i, d));
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing layout file: " + path);
}

EmbeddingLayout load_layout(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() ||
        rows[0] != std::vector<std::string>{"clip_id", "label", "P", "A", "D"}) {
        throw DataError("layout header must be 'clip_id,label,P,A,D': " + path);
    }
    EmbeddingLayout layout;
    layout.coords.resize(static_cast<Eigen::Index>(rows.size()) - 1, 3);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 5) {
            throw DataError("bad layout row " + std::to_string(r + 1) + " in " +
                            path);
        }
        layout.clip_ids.push_back(rows[r][0]);
        layout.labels.push_back(rows[r][1]);
        for (int d = 0; d < 3; ++d) {
            layout.coords(static_cast<Eigen::Index>(r) - 1, d) =
                csv::parse_double(rows[r][static_cast<std::size_t>(d) + 2],
                                  "layout coordinate");
        }
    }
    if (layout.size() == 0) throw DataError("empty layout file: " + path);
    return layout;
}

}  // namespace padspace
