#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ptx {

/// Cue lists driving the report classifier. Multi-word cues are matched as
/// token sequences; matching is case-insensitive.
struct Lexicon {
    std::vector<std::string> targets;
    std::vector<std::string> pre_negation;
    std::vector<std::string> post_negation;
    std::vector<std::string> uncertainty;
    /// Maximum number of tokens allowed between a pre-target cue and the target.
    int pre_window = 6;
    /// Maximum number of tokens allowed between the target and a post-target cue.
    int post_window = 4;

    /// The lexicon shipped in data/lexicon.txt.
    static const Lexicon& builtin();
    /// Sections [targets], [pre_negation], [post_negation], [uncertainty];
    /// one cue per line; '#' starts a comment. Throws ValidationError.
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::filesystem::path& path);
};

/// A sentence with offsets into the original report text.
struct Sentence {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::string text;
};

enum class Polarity { Positive, Negated, None };
std::string_view to_string(Polarity p) noexcept;

struct Mention {
    int sentence_index = 0;
    std::size_t start = 0;  // offsets into the report text
    std::size_t end = 0;
    Polarity polarity = Polarity::Positive;
    bool uncertain = false;
    std::string negation_cue;  // empty unless negated
};

struct ReportClassification {
    bool positive = false;
    std::vector<Mention> mentions;
    int sentence_count = 0;
};

/// Splits on '.', '?', '!' and newlines; trims whitespace and drops empty
/// pieces.
std::vector<Sentence> split_sentences(std::string_view text);

/// Target mentions in one sentence; offsets are relative to `sentence`.
std::vector<Mention> find_mentions(std::string_view sentence, const Lexicon& lex = Lexicon::builtin());

/// Positive if any mention is positive, Negated if all mentions are negated,
/// None without a target term.
Polarity classify_sentence(std::string_view sentence, const Lexicon& lex = Lexicon::builtin());

ReportClassification classify_report(std::string_view text, const Lexicon& lex = Lexicon::builtin());

}  // namespace ptx
