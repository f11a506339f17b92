#include "solvita/llm_port.hpp"
#include "solvita/prompt.hpp"

#include "support/test_util.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace solvita;

TEST_CASE("render_prompt substitutes every placeholder verbatim") {
    PromptTemplate tmpl{"t", "A <X> B", {"X"}};
    CHECK(render_prompt(tmpl, {{"X", "1"}}) == "A 1 B");

    PromptTemplate multi{"m", "<A> and <A> with <B_2>", {"A", "B_2"}};
    CHECK(render_prompt(multi, {{"A", "x"}, {"B_2", "y"}}) == "x and x with y");
}

TEST_CASE("missing bindings fail naming the key") {
    PromptTemplate tmpl{"t", "A <X> B", {"X"}};
    try {
        render_prompt(tmpl, {});
        FAIL("expected a prompt error");
    } catch (const PromptError& e) {
        CHECK(std::string(e.what()).find("X") != std::string::npos);
    }
    // Placeholders in the body without bindings also fail, listed by name.
    PromptTemplate loose{"l", "uses <UNBOUND_KEY>", {}};
    try {
        render_prompt(loose, {});
        FAIL("expected a prompt error");
    } catch (const PromptError& e) {
        CHECK(std::string(e.what()).find("UNBOUND_KEY") != std::string::npos);
    }
}

TEST_CASE("rendering is single-pass: values containing placeholders stay literal") {
    PromptTemplate tmpl{"t", "payload: <X>", {"X"}};
    const std::string out = render_prompt(tmpl, {{"X", "injected <Y> token"}});
    CHECK(out == "payload: injected <Y> token");
    // No second expansion even when Y is bound too.
    PromptTemplate both{"b", "<X>", {"X"}};
    CHECK(render_prompt(both, {{"X", "<Y>"}, {"Y", "boom"}}) == "<Y>");
}

TEST_CASE("lowercase and non-key angle text is not a placeholder") {
    PromptTemplate tmpl{"t", "vector<int> stays, <KEY> goes", {"KEY"}};
    CHECK(render_prompt(tmpl, {{"KEY", "value"}}) == "vector<int> stays, value goes");
}

TEST_CASE("prompt library round-trips through its JSON file format") {
    test::TempDir dir;
    PromptLibrary lib = PromptLibrary::defaults();
    const auto path = dir.path / "prompts.json";
    lib.save_file(path);
    PromptLibrary loaded = PromptLibrary::load_file(path);
    CHECK(loaded.names() == lib.names());
    for (const std::string& name : lib.names()) {
        CHECK(loaded.get(name).body == lib.get(name).body);
        CHECK(loaded.get(name).required_keys == lib.get(name).required_keys);
    }
    CHECK_THROWS_AS(loaded.get("no-such-template"), PromptError);
}

TEST_CASE("default prompt library covers every pipeline call site") {
    PromptLibrary lib = PromptLibrary::defaults();
    for (const char* name :
         {"abstract_problem", "generate_code.initial", "generate_code.patch_decision",
          "generate_code.patch", "generate_code.regenerate", "generate_tests.generator",
          "generate_tests.validator", "generate_tests.checker", "generate_tests.solver",
          "code_analyst.main", "code_analyst.force_tool", "code_analyst.json_repair",
          "hacker.semantic.generator", "hacker.stress.generator", "hacker.antihash.generator",
          "hacker.semantic.checklist", "hacker.semantic.patch"}) {
        CHECK(lib.contains(name));
    }
}

TEST_CASE("scripted backend consumes steps strictly in order") {
    ScriptedBackend backend({{"alpha", "one"}, {"beta.*", "two"}});
    DecodingParams params;
    CHECK(backend.complete("alpha", "p", params) == "one");
    CHECK(backend.complete("beta.gamma", "p", params) == "two");
    CHECK(backend.remaining() == 0);
    CHECK_THROWS_AS(backend.complete("alpha", "p", params), LlmError);
}

TEST_CASE("scripted backend fails loudly on unexpected prompt names") {
    ScriptedBackend backend({{"expected", "resp"}});
    DecodingParams params;
    CHECK_THROWS_AS(backend.complete("surprise", "p", params), LlmError);
}

TEST_CASE("scripted scenarios round-trip through their file format") {
    test::TempDir dir;
    const auto path = dir.path / "scenario.json";
    ScriptedBackend::save_scenario(path, {{"a", "1"}, {"b", "2"}},
                                   {{"oracle_judge_verdict", "agree"}});
    ScriptedBackend backend = ScriptedBackend::from_file(path);
    CHECK(backend.metadata().at("oracle_judge_verdict") == "agree");
    DecodingParams params;
    CHECK(backend.complete("a", "p", params) == "1");
    CHECK(backend.complete("b", "p", params) == "2");
}

TEST_CASE("http backend speaks the chat-completion wire format") {
    httplib::Server server;
    nlohmann::json seen_request;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_request = nlohmann::json::parse(req.body);
        const nlohmann::json reply = {
            {"choices",
             nlohmann::json::array(
                 {{{"message", {{"role", "assistant"}, {"content", "canned reply"}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackend::Config config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "test-model";
    HttpBackend backend(config);
    DecodingParams params;
    params.temperature = 0.1;
    params.max_tokens = 16384;
    const std::string reply = backend.complete("any", "hello there", params);
    CHECK(reply == "canned reply");
    CHECK(seen_request.at("model") == "test-model");
    CHECK(seen_request.at("temperature").get<double>() == doctest::Approx(0.1));
    CHECK(seen_request.at("max_tokens").get<int>() == 16384);
    CHECK(seen_request.at("messages").at(0).at("content") == "hello there");

    server.stop();
    server_thread.join();
}
