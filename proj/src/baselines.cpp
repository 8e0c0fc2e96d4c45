#include "perception/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>

#include "perception/corpus.hpp"
#include "perception/error.hpp"

namespace perception {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

std::vector<std::string> bleu_tokens(std::string_view text, bool case_fold) {
    std::vector<std::string> tokens = tokenize(text);
    if (case_fold)
        for (auto &t : tokens)
            std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return tokens;
}

NgramCounts count_ngrams(const std::vector<std::string> &tokens, std::size_t n) {
    NgramCounts counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return counts;
}

} // namespace

BleuStats bleu_stats(std::string_view candidate, std::span<const std::string> references, std::size_t max_n,
                     bool case_fold) {
    if (max_n < 1) throw ValidationError("BLEU max_n must be >= 1");
    const auto cand = bleu_tokens(candidate, case_fold);
    if (cand.empty()) throw ValidationError("BLEU candidate is empty");
    if (references.empty()) throw ValidationError("BLEU needs at least one reference");

    std::vector<std::vector<std::string>> refs;
    for (const auto &r : references) {
        refs.push_back(bleu_tokens(r, case_fold));
        if (refs.back().empty()) throw ValidationError("BLEU reference is empty");
    }

    BleuStats st;
    st.candidate_length = cand.size();
    st.reference_length = refs.front().size();
    for (const auto &r : refs) {
        const auto diff = [&](std::size_t len) {
            return len > st.candidate_length ? len - st.candidate_length : st.candidate_length - len;
        };
        if (diff(r.size()) < diff(st.reference_length) ||
            (diff(r.size()) == diff(st.reference_length) && r.size() < st.reference_length))
            st.reference_length = r.size();
    }

    for (std::size_t n = 1; n <= max_n; ++n) {
        NgramCounts cand_counts = count_ngrams(cand, n);
        NgramCounts max_ref;
        for (const auto &r : refs)
            for (const auto &[gram, count] : count_ngrams(r, n)) max_ref[gram] = std::max(max_ref[gram], count);
        std::size_t matched = 0, total = 0;
        for (const auto &[gram, count] : cand_counts) {
            total += count;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) matched += std::min(count, it->second);
        }
        st.matches.push_back(matched);
        st.totals.push_back(total);
    }
    return st;
}

double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig &config) {
    const BleuStats st = bleu_stats(candidate, references, config.max_n, config.case_fold);
    const bool smooth = config.smoothing == BleuSmoothing::add_one;

    double log_sum = 0.0;
    std::size_t orders = 0;
    for (std::size_t i = 0; i < st.totals.size(); ++i) {
        // Orders longer than the candidate contribute no n-grams and are skipped.
        if (st.totals[i] == 0) continue;
        const double num = static_cast<double>(st.matches[i]) + (smooth ? 1.0 : 0.0);
        const double den = static_cast<double>(st.totals[i]) + (smooth ? 1.0 : 0.0);
        if (num == 0.0) return 0.0;
        log_sum += std::log(num / den);
        ++orders;
    }
    const double c = static_cast<double>(st.candidate_length);
    const double r = static_cast<double>(st.reference_length);
    const double log_bp = c < r ? 1.0 - r / c : 0.0;
    return std::exp(log_sum / static_cast<double>(orders) + log_bp);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ValidationError("pearson: inputs differ in length");
    if (xs.size() < 2) throw ValidationError("pearson: need at least two points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw NumericError("correlation undefined: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ValidationError("spearman: inputs differ in length");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

} // namespace perception
