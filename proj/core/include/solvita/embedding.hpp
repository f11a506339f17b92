#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace solvita {

using Embedding = std::vector<double>;

/// Cosine of the angle between a and b. Throws std::invalid_argument on
/// dimension mismatch or a zero vector.
double cosine_similarity(const Embedding& a, const Embedding& b);

double l2_norm(const Embedding& v);
void normalize_in_place(Embedding& v);

// Text-embedding source. The engine never learns embeddings itself; callers
// inject whichever embedder the deployment uses.
class EmbedderPort {
public:
    virtual ~EmbedderPort() = default;
    virtual Embedding embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
};

// Deterministic hash-seeded embedder for tests and offline runs. The same
// text always maps to the same unit vector.
class HashEmbedder : public EmbedderPort {
public:
    explicit HashEmbedder(std::size_t dimension = 64);
    Embedding embed(const std::string& text) override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
};

// OpenAI-compatible embeddings endpoint client. Vectors are renormalized to
// unit length on receipt.
class HttpEmbedder : public EmbedderPort {
public:
    struct Config {
        std::string base_url = "http://127.0.0.1:8000";
        std::string path = "/v1/embeddings";
        std::string model = "default";
        std::string api_key;
        std::size_t dimension = 1536;
        double timeout_seconds = 60.0;
    };

    explicit HttpEmbedder(Config config);
    Embedding embed(const std::string& text) override;
    std::size_t dimension() const override { return config_.dimension; }

private:
    Config config_;
};

} // namespace solvita
