#include "mtr/lm/kn_lm.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"

namespace mtr {

namespace {

constexpr char32_t kUnkId = 0;
constexpr char32_t kBosId = 1;
constexpr char32_t kEosId = 2;
constexpr int32_t kFirstWordId = 3;

std::vector<std::string> split_words(const std::string& line) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : line) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

// D = n1/(n1+2·n2) from the order's count-of-counts; the clamp keeps the
// 0 ≤ D < 1 invariant when n2 = 0 on tiny corpora.
double discount_from(const std::unordered_map<std::u32string, uint64_t>& table,
                     bool* degenerate) {
    uint64_t n1 = 0, n2 = 0;
    for (const auto& [key, count] : table) {
        if (count == 1) ++n1;
        if (count == 2) ++n2;
    }
    if (n1 + 2 * n2 == 0) {
        *degenerate = true;
        return 0.0;
    }
    double d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
    return std::min(d, 1.0 - 1e-6);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

int32_t KnLanguageModel::word_id(const std::string& w) const {
    if (w == "<unk>") return kUnkId;
    if (w == "<s>") return kBosId;
    if (w == "</s>") return kEosId;
    auto it = word2id_.find(w);
    return it == word2id_.end() ? kUnkId : it->second;
}

KnLanguageModel KnLanguageModel::train(const std::vector<std::string>& corpus, int order) {
    if (order < 1) fail("lm_train: order must be at least 1");
    if (corpus.empty()) fail("lm_train: empty corpus");

    KnLanguageModel m;
    m.order_ = order;

    std::set<std::string> vocab;
    std::vector<std::vector<std::string>> sentences;
    sentences.reserve(corpus.size());
    for (const std::string& line : corpus) {
        sentences.push_back(split_words(line));
        for (const std::string& w : sentences.back()) vocab.insert(w);
    }
    m.id2word_ = {"<unk>", "<s>", "</s>"};
    for (const std::string& w : vocab) {
        m.word2id_.emplace(w, static_cast<int32_t>(m.id2word_.size()));
        m.id2word_.push_back(w);
    }

    // Raw counts per order; windows ending in <s> are never counted.
    const size_t n = static_cast<size_t>(order);
    std::vector<std::unordered_map<Key, uint64_t>> raw(n);
    for (const auto& words : sentences) {
        Key stream(n - 1, kBosId);
        for (const std::string& w : words) {
            stream.push_back(static_cast<char32_t>(m.word2id_.at(w)));
        }
        stream.push_back(kEosId);
        for (size_t k = 1; k <= n; ++k) {
            for (size_t i = 0; i + k <= stream.size(); ++i) {
                if (stream[i + k - 1] == kBosId) continue;
                ++raw[k - 1][stream.substr(i, k)];
            }
        }
    }

    // Adjusted counts: raw at the top order and for <s>-initial k-grams
    // (their only left extensions are more padding); continuation counts
    // everywhere else.
    m.events_.resize(n);
    m.events_[n - 1] = raw[n - 1];
    for (size_t k = n - 1; k >= 1; --k) {
        std::unordered_map<Key, uint64_t> cont;
        for (const auto& [gram, count] : raw[k]) cont[gram.substr(1)] += 1;
        for (const auto& [gram, count] : raw[k - 1]) {
            m.events_[k - 1][gram] = gram[0] == kBosId ? count : cont.at(gram);
        }
    }

    m.discounts_.resize(n);
    for (size_t k = 0; k < n; ++k) {
        m.discounts_[k] = discount_from(m.events_[k], &m.degenerate_);
    }
    m.build_contexts();
    return m;
}

void KnLanguageModel::build_contexts() {
    contexts_.assign(events_.size(), {});
    for (size_t k = 0; k < events_.size(); ++k) {
        for (const auto& [gram, count] : events_[k]) {
            Ctx& c = contexts_[k][gram.substr(0, gram.size() - 1)];
            c.total += count;
            c.n1plus += 1;
        }
    }
}

double KnLanguageModel::prob_ids(const Key& context, char32_t word) const {
    // context holds exactly order-1 ids (start-padded by the callers)
    const double uniform =
        word == kBosId ? 0.0 : 1.0 / static_cast<double>(id2word_.size() - 1);
    double p = uniform;  // conceptual order-0 distribution
    for (size_t k = 1; k <= static_cast<size_t>(order_); ++k) {
        Key h = context.substr(context.size() - (k - 1));
        auto ctx_it = contexts_[k - 1].find(h);
        if (ctx_it == contexts_[k - 1].end()) break;  // unseen context: keep lower-order p
        const Ctx& c = ctx_it->second;
        const double d = discounts_[k - 1];
        auto ev_it = events_[k - 1].find(h + Key(1, word));
        double a = ev_it == events_[k - 1].end() ? 0.0 : static_cast<double>(ev_it->second);
        double discounted = std::max(a - d, 0.0) / static_cast<double>(c.total);
        double lambda = d * static_cast<double>(c.n1plus) / static_cast<double>(c.total);
        p = discounted + lambda * p;
    }
    return p;
}

double KnLanguageModel::prob(const std::vector<std::string>& context,
                             const std::string& word) const {
    Key ctx(static_cast<size_t>(order_ - 1), kBosId);
    size_t use = std::min(context.size(), static_cast<size_t>(order_ - 1));
    for (size_t i = 0; i < use; ++i) {
        ctx[ctx.size() - use + i] =
            static_cast<char32_t>(word_id(context[context.size() - use + i]));
    }
    return prob_ids(ctx, static_cast<char32_t>(word_id(word)));
}

double KnLanguageModel::perplexity(const std::vector<std::string>& test) const {
    if (test.empty()) fail("lm_perplexity: empty test set");
    double log_sum = 0.0;
    uint64_t tokens = 0;
    const size_t ctx_len = static_cast<size_t>(order_ - 1);
    for (const std::string& line : test) {
        Key stream(ctx_len, kBosId);
        for (const std::string& w : split_words(line)) {
            stream.push_back(static_cast<char32_t>(word_id(w)));
        }
        stream.push_back(kEosId);
        for (size_t t = ctx_len; t < stream.size(); ++t) {
            log_sum += std::log(prob_ids(stream.substr(t - ctx_len, ctx_len), stream[t]));
            ++tokens;
        }
    }
    return std::exp(-log_sum / static_cast<double>(tokens));
}

std::vector<std::string> KnLanguageModel::event_space() const {
    std::vector<std::string> events;
    events.reserve(id2word_.size() - 1);
    for (size_t i = 0; i < id2word_.size(); ++i) {
        if (static_cast<char32_t>(i) != kBosId) events.push_back(id2word_[i]);
    }
    return events;
}

void KnLanguageModel::save(const std::string& path) const {
    std::ostringstream os;
    os << "#mtrobust-knlm v1\n";
    os << "order " << order_ << "\n";
    os << "degenerate " << (degenerate_ ? 1 : 0) << "\n";
    os << "discounts";
    for (double d : discounts_) os << ' ' << format_double(d);
    os << "\n";
    os << "vocab " << (id2word_.size() - kFirstWordId) << "\n";
    for (size_t i = kFirstWordId; i < id2word_.size(); ++i) os << id2word_[i] << "\n";
    for (size_t k = 0; k < events_.size(); ++k) {
        std::map<Key, uint64_t> sorted(events_[k].begin(), events_[k].end());
        os << "ngrams " << (k + 1) << " " << sorted.size() << "\n";
        for (const auto& [gram, count] : sorted) {
            for (char32_t id : gram) os << static_cast<uint32_t>(id) << ' ';
            os << count << "\n";
        }
    }
    write_file(path, os.str());
}

KnLanguageModel KnLanguageModel::load(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    size_t at = 0;
    auto next = [&]() -> const std::string& {
        if (at >= lines.size()) fail("model file truncated: " + path);
        return lines[at++];
    };
    if (next() != "#mtrobust-knlm v1") fail("not a knlm model file: " + path);

    KnLanguageModel m;
    std::istringstream hdr(next());
    std::string tag;
    hdr >> tag >> m.order_;
    if (tag != "order" || m.order_ < 1) fail("bad order line: " + path);

    std::istringstream deg(next());
    int flag = 0;
    deg >> tag >> flag;
    if (tag != "degenerate") fail("bad degenerate line: " + path);
    m.degenerate_ = flag != 0;

    std::istringstream dis(next());
    dis >> tag;
    if (tag != "discounts") fail("bad discounts line: " + path);
    m.discounts_.resize(static_cast<size_t>(m.order_));
    for (double& d : m.discounts_) {
        if (!(dis >> d)) fail("bad discounts line: " + path);
    }

    std::istringstream voc(next());
    size_t vocab_count = 0;
    voc >> tag >> vocab_count;
    if (tag != "vocab") fail("bad vocab line: " + path);
    m.id2word_ = {"<unk>", "<s>", "</s>"};
    for (size_t i = 0; i < vocab_count; ++i) {
        m.id2word_.push_back(next());
        m.word2id_.emplace(m.id2word_.back(), static_cast<int32_t>(m.id2word_.size() - 1));
    }

    m.events_.resize(static_cast<size_t>(m.order_));
    for (size_t k = 1; k <= static_cast<size_t>(m.order_); ++k) {
        std::istringstream ng(next());
        size_t count = 0, kk = 0;
        ng >> tag >> kk >> count;
        if (tag != "ngrams" || kk != k) fail("bad ngrams header: " + path);
        for (size_t i = 0; i < count; ++i) {
            std::istringstream row(next());
            Key gram;
            for (size_t j = 0; j < k; ++j) {
                uint32_t id = 0;
                if (!(row >> id)) fail("bad ngram row: " + path);
                if (id >= m.id2word_.size()) fail("ngram id out of range: " + path);
                gram.push_back(static_cast<char32_t>(id));
            }
            uint64_t c = 0;
            if (!(row >> c) || c == 0) fail("bad ngram count: " + path);
            m.events_[k - 1].emplace(std::move(gram), c);
        }
    }
    m.build_contexts();
    return m;
}

}  // namespace mtr
