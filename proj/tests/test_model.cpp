#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "depsev/model.hpp"
#include "doctest.h"

using namespace depsev;

namespace {

ModelConfig small_config(HeadKind head) {
    ModelConfig c = ModelConfig::toy();
    c.head = head;
    c.head_hidden = 8;
    c.dropout = 0.0;
    return c;
}

Eigen::VectorXd random_features(int dim, Rng& rng) {
    Eigen::VectorXd f(dim);
    for (int i = 0; i < dim; ++i) f(i) = uniform_real(rng);
    return f;
}

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / denom;
}

const std::vector<int> kIds = {0, 7, 21, 4};

}  // namespace

TEST_CASE("aggregate layers matches an explicit loop") {
    Rng rng(314);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + static_cast<int>(uniform_index(rng, 6));
        const int d = 1 + static_cast<int>(uniform_index(rng, 24));
        Eigen::MatrixXd weights(1, k), states(k, d);
        for (int i = 0; i < k; ++i) {
            weights(0, i) = 2.0 * uniform_real(rng) - 1.0;
            for (int j = 0; j < d; ++j) states(i, j) = 2.0 * uniform_real(rng) - 1.0;
        }

        Eigen::MatrixXd pooled = aggregate_layers(weights, states);
        REQUIRE(pooled.rows() == 1);
        REQUIRE(pooled.cols() == d);

        Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(d);
        for (int i = 0; i < k; ++i) expected += weights(0, i) * states.row(i);
        for (int j = 0; j < d; ++j) {
            CAPTURE(trial);
            CHECK(std::abs(pooled(0, j) - expected(j)) < 1e-12);
        }
    }
}

TEST_CASE("aggregate layers accepts expressions and other scalars") {
    Eigen::MatrixXf weights = Eigen::MatrixXf::Constant(1, 3, 0.5f);
    Eigen::MatrixXf states = Eigen::MatrixXf::Ones(3, 4);
    Eigen::MatrixXf pooled = aggregate_layers(weights, states);
    CHECK(pooled.isApprox(Eigen::MatrixXf::Constant(1, 4, 1.5f)));

    Eigen::MatrixXd big = Eigen::MatrixXd::Ones(5, 4);
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(2, 3, 1.0);
    Eigen::MatrixXd fromExpr = aggregate_layers(w.row(0), big.topRows(3));
    CHECK(fromExpr.isApprox(Eigen::MatrixXd::Constant(1, 4, 3.0)));
}

TEST_CASE("head kinds parse and print") {
    for (HeadKind k : {HeadKind::mlp, HeadKind::lstm, HeadKind::mm_gate, HeadKind::mm_xatt}) {
        CHECK(parse_head_kind(head_kind_name(k)) == k);
    }
    CHECK_THROWS_AS(parse_head_kind("transformer"), ConfigError);
}

TEST_CASE("model config validation") {
    ModelConfig c = ModelConfig::toy();
    CHECK_NOTHROW(c.validate());

    c.cls_layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.cls_layers = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = ModelConfig::toy();
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ModelConfig::toy();
    c.head_hidden = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    ModelConfig ref = ModelConfig::reference();
    CHECK_NOTHROW(ref.validate());
    CHECK(ref.cls_layers == 4);
    CHECK(ref.encoder.hidden_dim == 768);
    CHECK(ref.head == HeadKind::mlp);
    CHECK(ref.freeze_encoder);
}

TEST_CASE("parameter counts by closed form") {
    // Reference shape, head only: the fused input is 768 + 31 = 799 wide, so
    // 799*512 + 512 + 512*4 + 4 = 411652; pooling adds one weight per layer.
    ModelConfig ref = ModelConfig::reference();
    CHECK(head_param_count(ref) == 411652u);
    CHECK(head_param_count(ref) + static_cast<std::size_t>(ref.cls_layers) == 411656u);
    CHECK(classifier_param_count(ref) == 66774536u);

    SUBCASE("allocated models agree for every head") {
        for (HeadKind kind : {HeadKind::mlp, HeadKind::lstm, HeadKind::mm_gate, HeadKind::mm_xatt}) {
            for (int k : {1, 2}) {
                ModelConfig c = small_config(kind);
                c.cls_layers = k;
                Classifier model(c, 5);
                CAPTURE(head_kind_name(kind));
                CAPTURE(k);
                CHECK(model.count_parameters() == classifier_param_count(c));
                CHECK(model.count_trainable() ==
                      head_param_count(c) + static_cast<std::size_t>(k));
            }
        }
    }

    SUBCASE("an unfrozen encoder counts as trainable") {
        ModelConfig c = small_config(HeadKind::mlp);
        c.freeze_encoder = false;
        Classifier model(c, 5);
        CHECK(model.count_trainable() == model.count_parameters());
    }
}

TEST_CASE("classifier forward") {
    Rng frng(88);
    for (HeadKind kind : {HeadKind::mlp, HeadKind::lstm, HeadKind::mm_gate, HeadKind::mm_xatt}) {
        CAPTURE(head_kind_name(kind));
        ModelConfig c = small_config(kind);
        Classifier model(c, 3);
        Eigen::VectorXd feats = random_features(feature_dim(c.features), frng);

        ad::Var logits = model.forward(kIds, feats);
        CHECK(logits->value.rows() == 1);
        CHECK(logits->value.cols() == kNumLabels);

        int label = model.predict(kIds, feats);
        CHECK(label >= 0);
        CHECK(label < kNumLabels);

        Eigen::VectorXd proba = model.predict_proba(kIds, feats);
        REQUIRE(proba.size() == kNumLabels);
        CHECK(proba.sum() == doctest::Approx(1.0));
        CHECK(proba.minCoeff() > 0.0);
        CHECK(proba(label) == doctest::Approx(proba.maxCoeff()));

        ad::Var again = model.forward(kIds, feats);
        CHECK(logits->value.isApprox(again->value));
    }
}

TEST_CASE("dropout only perturbs training mode") {
    ModelConfig c = small_config(HeadKind::mlp);
    c.dropout = 0.5;
    Classifier model(c, 3);
    Rng frng(12);
    Eigen::VectorXd feats = random_features(feature_dim(c.features), frng);

    Eigen::MatrixXd eval_a = model.forward(kIds, feats, false)->value;
    Eigen::MatrixXd eval_b = model.forward(kIds, feats, false)->value;
    CHECK(eval_a.isApprox(eval_b));

    Eigen::MatrixXd train_a = model.forward(kIds, feats, true)->value;
    Eigen::MatrixXd train_b = model.forward(kIds, feats, true)->value;
    CHECK_FALSE(train_a.isApprox(train_b));
}

TEST_CASE("classifier rejects bad inputs") {
    ModelConfig c = small_config(HeadKind::mlp);
    Classifier model(c, 3);
    CHECK_THROWS_AS(model.forward(kIds, Eigen::VectorXd::Zero(5)), ArgumentError);
    CHECK_THROWS_AS(model.loss(kIds, Eigen::VectorXd::Zero(31), 4), ArgumentError);
    CHECK_THROWS_AS(model.loss(kIds, Eigen::VectorXd::Zero(31), -1), ArgumentError);
}

TEST_CASE("classifier loss gradients match finite differences") {
    Rng frng(41);
    const double eps = 1e-5;

    for (HeadKind kind : {HeadKind::mlp, HeadKind::lstm, HeadKind::mm_gate, HeadKind::mm_xatt}) {
        CAPTURE(head_kind_name(kind));
        ModelConfig c = small_config(kind);
        Classifier model(c, 29);
        Eigen::VectorXd feats = random_features(feature_dim(c.features), frng);
        const int label = 2;

        auto loss_value = [&]() { return model.loss(kIds, feats, label)->value(0, 0); };

        for (const auto& [name, p] : model.trainable_parameters()) {
            ad::clear_grad(p);
        }
        ad::Var root = model.loss(kIds, feats, label);
        ad::backward(root);

        for (const auto& [name, p] : model.trainable_parameters()) {
            Eigen::MatrixXd analytic =
                p->has_grad() ? p->grad : Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols());
            for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
                for (Eigen::Index col = 0; col < p->value.cols(); ++col) {
                    const double saved = p->value(r, col);
                    p->value(r, col) = saved + eps;
                    const double up = loss_value();
                    p->value(r, col) = saved - eps;
                    const double down = loss_value();
                    p->value(r, col) = saved;
                    const double fd = (up - down) / (2.0 * eps);
                    CAPTURE(name);
                    CAPTURE(r);
                    CAPTURE(col);
                    CHECK(rel_err(analytic(r, col), fd) < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("gradients flow into an unfrozen encoder") {
    ModelConfig c = small_config(HeadKind::mlp);
    c.freeze_encoder = false;
    Classifier model(c, 17);
    Rng frng(9);
    Eigen::VectorXd feats = random_features(feature_dim(c.features), frng);

    ad::Var root = model.loss(kIds, feats, 1);
    ad::backward(root);

    std::map<std::string, ad::Var> by_name;
    for (const auto& [name, v] : model.named_parameters()) by_name[name] = v;

    ad::Var gamma = by_name.at("encoder.embeddings.ln.gamma");
    REQUIRE(gamma->has_grad());

    const double eps = 1e-5;
    auto loss_value = [&]() { return model.loss(kIds, feats, 1)->value(0, 0); };
    for (Eigen::Index i = 0; i < gamma->value.cols(); ++i) {
        const double saved = gamma->value(0, i);
        gamma->value(0, i) = saved + eps;
        const double up = loss_value();
        gamma->value(0, i) = saved - eps;
        const double down = loss_value();
        gamma->value(0, i) = saved;
        CHECK(rel_err(gamma->grad(0, i), (up - down) / (2.0 * eps)) < 1e-4);
    }
}

TEST_CASE("classifier parameter names") {
    ModelConfig c = small_config(HeadKind::mlp);
    Classifier model(c, 1);
    std::set<std::string> names;
    for (const auto& [name, v] : model.named_parameters()) names.insert(name);
    CHECK(names.count("encoder.embeddings.word") == 1);
    CHECK(names.count("alpha") == 1);
    CHECK(names.count("head.w1") == 1);
    CHECK(names.count("head.b2") == 1);
    CHECK(names.size() == model.named_parameters().size());

    Classifier lstm(small_config(HeadKind::lstm), 1);
    std::set<std::string> lstm_names;
    for (const auto& [name, v] : lstm.named_parameters()) lstm_names.insert(name);
    CHECK(lstm_names.count("head.lstm.w") == 1);
    CHECK(lstm_names.count("head.out.b") == 1);
}

TEST_CASE("classifier seeding") {
    ModelConfig c = small_config(HeadKind::mm_gate);
    Classifier a(c, 11), b(c, 11), other(c, 12);
    Rng frng(2);
    Eigen::VectorXd feats = random_features(feature_dim(c.features), frng);

    CHECK(a.predict_proba(kIds, feats) == b.predict_proba(kIds, feats));
    CHECK(a.predict_proba(kIds, feats) != other.predict_proba(kIds, feats));
}

TEST_CASE("classifier weight transfer") {
    ModelConfig c = small_config(HeadKind::mm_xatt);
    Classifier source(c, 21), target(c, 22);
    Rng frng(6);
    Eigen::VectorXd feats = random_features(feature_dim(c.features), frng);

    std::map<std::string, Eigen::MatrixXd> tensors;
    for (const auto& [name, v] : source.named_parameters()) tensors[name] = v->value;

    CHECK(source.predict_proba(kIds, feats) != target.predict_proba(kIds, feats));
    target.load_weights(tensors);
    CHECK(source.predict_proba(kIds, feats) == target.predict_proba(kIds, feats));

    SUBCASE("missing tensor") {
        tensors.erase("head.keys");
        CHECK_THROWS_AS(target.load_weights(tensors), InferenceError);
    }
    SUBCASE("wrong shape") {
        tensors["alpha"] = Eigen::MatrixXd::Zero(1, 7);
        CHECK_THROWS_AS(target.load_weights(tensors), InferenceError);
    }
}
