#pragma once

// Scripted backends for the worked examples used across the test suites.

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "combinterp/backend.hpp"
#include "combinterp/dataset.hpp"
#include "combinterp/fixture_backend.hpp"

namespace scenarios {

std::filesystem::path data_dir();
std::filesystem::path manifest_path();

// Samples from tests/data/samples.jsonl: "1" (drying rack), "2" (Sharp 1),
// "3" (Origami), "bionic", "eggboard", "yedoo".
const std::vector<combinterp::DesignSample>& bundled();
const combinterp::DesignSample& sample(const std::string& id);

// Entities found in `text` in the given order; each is searched for after the
// end of the previous one.
std::vector<combinterp::CandidateEntity> spans(const std::string& text,
                                               const std::vector<std::string>& words);

// Defaults: similarity 0.0, relations "none" (confidence 0.9).
combinterp::FixtureBackend base_fixture();

void script_relation(combinterp::FixtureBackend& f, const std::string& text, const std::string& head,
                     const std::string& tail, const std::string& label, double confidence,
                     const std::string* image = nullptr);

// Scripts a multi-turn conversation: each (prompt, reply) is one user turn
// answered by the assistant; earlier turns are part of later requests.
void script_conversation(combinterp::FixtureBackend& f,
                         const std::vector<std::pair<std::string, std::string>>& turns,
                         const std::string* image);

// Unimodal: labels include "vase"; 7 entities; vase series -> tree trunks
// "inspired by", tree trunks -> design idea "inspired by".
combinterp::FixtureBackend bionic_unimodal();
std::vector<std::string> bionic_entities();

// Unimodal: knife block base, knife sharpener via "part of".
combinterp::FixtureBackend sharp1_unimodal();

// Multimodal, D = 4: "pendant luminaire" is closest to the image; relation to
// "egg cartons" is "inspired by".
combinterp::FixtureBackend eggboard_multimodal();
std::vector<double> eggboard_image_vector();

// Vanilla reply for Yedoo Wolfer.
combinterp::FixtureBackend yedoo_vanilla();
inline constexpr const char* kYedooReply = "Output [Base: racing scooter; Additive: bicycle]";

// Three-step generative conversation for the drying rack, with and without
// the image.
combinterp::FixtureBackend drying_rack_generative();
combinterp::FixtureBackend drying_rack_no_image();

// Everything above merged: unimodal for bionic and "2", multimodal for
// eggboard, vanilla for yedoo, generative (both variants) for "1".
combinterp::FixtureBackend all_scenarios();

std::shared_ptr<combinterp::FixtureBackend> shared(combinterp::FixtureBackend f);

}  // namespace scenarios
