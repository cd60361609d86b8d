#include "ptx/report_nlp.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ptx/error.hpp"

namespace ptx {

namespace detail {
extern const std::string_view kBuiltinLexicon;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    const auto b = std::find_if(s.begin(), s.end(), not_space);
    const auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return b < e ? std::string_view(&*b, static_cast<std::size_t>(e - b)) : std::string_view{};
}

struct Token {
    std::string text;  // lowercase
    std::size_t start;
    std::size_t end;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!std::isalnum(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
        out.push_back(Token{lower(s.substr(start, i - start)), start, i});
    }
    return out;
}

using Phrase = std::vector<std::string>;

std::vector<Phrase> to_phrases(const std::vector<std::string>& cues) {
    std::vector<Phrase> out;
    for (const auto& cue : cues) {
        Phrase p;
        for (auto& t : tokenize(cue)) p.push_back(std::move(t.text));
        if (!p.empty()) out.push_back(std::move(p));
    }
    return out;
}

bool matches_at(const std::vector<Token>& tokens, std::size_t i, const Phrase& p) {
    if (i + p.size() > tokens.size()) return false;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (tokens[i + k].text != p[k]) return false;
    }
    return true;
}

struct Occurrence {
    std::size_t begin;  // token index
    std::size_t end;    // exclusive
    std::size_t cue;    // index into the cue list
};

std::vector<Occurrence> find_all(const std::vector<Token>& tokens, const std::vector<Phrase>& phrases) {
    std::vector<Occurrence> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        for (std::size_t c = 0; c < phrases.size(); ++c) {
            if (matches_at(tokens, i, phrases[c])) out.push_back(Occurrence{i, i + phrases[c].size(), c});
        }
    }
    return out;
}

std::string join(const Phrase& p) {
    std::string out;
    for (const auto& t : p) out += (out.empty() ? "" : " ") + t;
    return out;
}

}  // namespace

std::string_view to_string(Polarity p) noexcept {
    switch (p) {
        case Polarity::Positive: return "positive";
        case Polarity::Negated: return "negated";
        case Polarity::None: return "none";
    }
    return "none";
}

Lexicon Lexicon::parse(std::string_view text) {
    Lexicon lex;
    std::vector<std::string>* section = nullptr;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line == "[targets]") {
                section = &lex.targets;
            } else if (line == "[pre_negation]") {
                section = &lex.pre_negation;
            } else if (line == "[post_negation]") {
                section = &lex.post_negation;
            } else if (line == "[uncertainty]") {
                section = &lex.uncertainty;
            } else {
                throw Error(ErrorCode::ValidationError,
                            "lexicon line " + std::to_string(line_no) + ": unknown section " + std::string(line));
            }
            continue;
        }
        if (!section) {
            throw Error(ErrorCode::ValidationError, "lexicon line " + std::to_string(line_no) + ": cue outside a section");
        }
        section->push_back(lower(line));
    }
    if (lex.targets.empty()) throw Error(ErrorCode::ValidationError, "lexicon has no [targets]");
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read lexicon " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = parse(detail::kBuiltinLexicon);
    return lex;
}

std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        const std::string_view piece = trim(text.substr(start, end - start));
        if (!piece.empty()) {
            const auto begin = static_cast<std::size_t>(piece.data() - text.data());
            out.push_back(Sentence{begin, begin + piece.size(), std::string(piece)});
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '.' || c == '?' || c == '!' || c == '\n') {
            flush(i);
            start = i + 1;
        }
    }
    flush(text.size());
    return out;
}

std::vector<Mention> find_mentions(std::string_view sentence, const Lexicon& lex) {
    const auto tokens = tokenize(sentence);
    const auto targets = find_all(tokens, to_phrases(lex.targets));
    if (targets.empty()) return {};

    const auto pre_phrases = to_phrases(lex.pre_negation);
    const auto post_phrases = to_phrases(lex.post_negation);
    const auto pre = find_all(tokens, pre_phrases);
    const auto post = find_all(tokens, post_phrases);
    const bool uncertain = !find_all(tokens, to_phrases(lex.uncertainty)).empty();

    std::vector<Mention> out;
    for (const auto& t : targets) {
        Mention m;
        m.start = tokens[t.begin].start;
        m.end = tokens[t.end - 1].end;
        m.uncertain = uncertain;
        // Prefer the closest governing cue; on equal distance, the longer one.
        std::ptrdiff_t best_gap = -1;
        std::size_t best_len = 0;
        auto consider = [&](std::size_t gap, std::size_t len, const Phrase& cue) {
            const auto g = static_cast<std::ptrdiff_t>(gap);
            if (best_gap < 0 || g < best_gap || (g == best_gap && len > best_len)) {
                best_gap = g;
                best_len = len;
                m.negation_cue = join(cue);
            }
        };
        for (const auto& c : pre) {
            if (c.end <= t.begin && t.begin - c.end <= static_cast<std::size_t>(lex.pre_window)) {
                consider(t.begin - c.end, c.end - c.begin, pre_phrases[c.cue]);
            }
        }
        for (const auto& c : post) {
            if (c.begin >= t.end && c.begin - t.end <= static_cast<std::size_t>(lex.post_window)) {
                consider(c.begin - t.end, c.end - c.begin, post_phrases[c.cue]);
            }
        }
        m.polarity = best_gap >= 0 ? Polarity::Negated : Polarity::Positive;
        out.push_back(std::move(m));
    }
    return out;
}

Polarity classify_sentence(std::string_view sentence, const Lexicon& lex) {
    const auto mentions = find_mentions(sentence, lex);
    if (mentions.empty()) return Polarity::None;
    const bool any_positive = std::any_of(mentions.begin(), mentions.end(),
                                          [](const Mention& m) { return m.polarity == Polarity::Positive; });
    return any_positive ? Polarity::Positive : Polarity::Negated;
}

ReportClassification classify_report(std::string_view text, const Lexicon& lex) {
    ReportClassification out;
    const auto sentences = split_sentences(text);
    out.sentence_count = static_cast<int>(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        for (auto m : find_mentions(sentences[i].text, lex)) {
            m.sentence_index = static_cast<int>(i);
            m.start += sentences[i].begin;
            m.end += sentences[i].begin;
            out.positive = out.positive || m.polarity == Polarity::Positive;
            out.mentions.push_back(std::move(m));
        }
    }
    return out;
}

}  // namespace ptx
