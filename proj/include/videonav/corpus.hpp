#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "videonav/interval_set.hpp"

namespace videonav {

inline constexpr const char* kCorpusSchema = "v1";

/// An annotated happening inside a video.
struct Event {
    Interval interval;
    std::string description;
    /// Lowercase tokens used by the mock caption and QA templates.
    std::vector<std::string> keywords;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Multiple-choice question grounded to a set of clue intervals.
struct GroundedQA {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
    int answer_index = 0;
    IntervalSet clue;
    /// One entry per hint escalation level, coarse first.
    std::vector<std::string> hint_texts;

    friend bool operator==(const GroundedQA&, const GroundedQA&) = default;
};

struct GroundedVideo {
    std::string id;
    double duration_s = 0.0;
    std::vector<Event> events;
    std::vector<GroundedQA> qa;

    friend bool operator==(const GroundedVideo&, const GroundedVideo&) = default;
};

struct Corpus {
    std::vector<GroundedVideo> videos;

    std::size_t qa_count() const noexcept;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// A (video, question) pair addressed by index into a corpus.
struct TaskRef {
    std::size_t video = 0;
    std::size_t qa = 0;
};

/// Every (video, question) pair in corpus order.
std::vector<TaskRef> enumerate_tasks(const Corpus& corpus);

struct CorpusParams {
    double duration_min_s = 600.0;
    double duration_max_s = 7200.0;
    int events_min = 6;
    int events_max = 14;
    double event_length_min_s = 6.0;
    double event_length_max_s = 12.0;
    int qa_per_video = 3;
    int choices = 4;
    /// Probability that a distractor event reuses keywords of a clue event.
    double distractor_rate = 0.5;
    int hint_levels = 2;
};

/// Throws ConfigError when a range is empty or a count is out of bounds.
void validate_params(const CorpusParams& params);

/// Deterministic synthetic corpus. Each question's clue is exactly one event interval.
Corpus generate_corpus(std::uint64_t seed, int n_videos, const CorpusParams& params = {});

/// Throws ValidationError naming the offending field.
void validate_video(const GroundedVideo& video);

/// Line-delimited JSON, one video per line.
std::string dump_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& text);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
/// Throws ParseError (with record index) or ValidationError.
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace videonav
