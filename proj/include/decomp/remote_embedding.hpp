#pragma once

#include <string>
#include <vector>

#include "decomp/concept_graph.hpp"
#include "decomp/teacher.hpp"

namespace decomp {

// Embedding service client speaking the common POST /v1/embeddings shape:
// request {"model": ..., "input": [text]}, reply {"data": [{"embedding": [...]}]}.
// Vectors are L2-normalized on receipt so cosine stays a plain dot product.
class RemoteEmbedding : public EmbeddingProvider {
public:
    struct Config {
        std::string endpoint;
        std::string model;
        std::string api_key_env = "EMBEDDING_API_KEY";
        int dimension = 0;  // 0 = accept whatever the service returns
        double timeout_seconds = 30.0;
        RetryPolicy retry;
    };

    explicit RemoteEmbedding(Config config);

    std::vector<double> embed(const std::string& text) const override;
    int dimension() const override { return dimension_; }
    std::string kind() const override { return "remote"; }

private:
    Config config_;
    mutable int dimension_;
};

}  // namespace decomp
