#pragma once

#include <string>

namespace videonav::prompts {

/// Navigator system prompt for a three-level tree of the given width.
std::string system_prompt(int width);

/// Caption-model instruction for one clip.
std::string caption_prompt(int num_frames, int num_words);

/// Video-QA instruction for one leaf clip. Mirrors the caption prompt layout
/// with the navigator's query appended.
std::string qa_prompt(int num_frames, const std::string& question, const std::string& query);

}  // namespace videonav::prompts
