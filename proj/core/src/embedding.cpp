#include "solvita/embedding.hpp"

#include <json.hpp>
#include <httplib.h>

#include <cmath>
#include <random>

namespace solvita {

double l2_norm(const Embedding& v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

void normalize_in_place(Embedding& v) {
    const double norm = l2_norm(v);
    if (norm == 0.0) {
        throw std::invalid_argument("cannot normalize a zero vector");
    }
    for (double& x : v) {
        x /= norm;
    }
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("embedding dimension mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine similarity of a zero vector");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
    }
    return dot / (na * nb);
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) {
        throw std::invalid_argument("embedder dimension must be positive");
    }
}

Embedding HashEmbedder::embed(const std::string& text) {
    // FNV-1a over the text seeds the vector; identical text, identical vector.
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    std::mt19937_64 rng(hash);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Embedding v(dimension_);
    for (double& x : v) {
        x = gauss(rng);
    }
    normalize_in_place(v);
    return v;
}

HttpEmbedder::HttpEmbedder(Config config) : config_(std::move(config)) {}

Embedding HttpEmbedder::embed(const std::string& text) {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long>(config_.timeout_seconds * 1000.0)));

    nlohmann::json request = {{"model", config_.model}, {"input", text}};
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto result = client.Post(config_.path, headers, request.dump(), "application/json");
    if (!result || result->status != 200) {
        throw std::runtime_error("embedding request failed" +
                                 (result ? ": status " + std::to_string(result->status) : ""));
    }
    try {
        const nlohmann::json response = nlohmann::json::parse(result->body);
        Embedding v = response.at("data").at(0).at("embedding").get<Embedding>();
        normalize_in_place(v);
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("unparseable embedding payload: ") + e.what());
    }
}

} // namespace solvita
