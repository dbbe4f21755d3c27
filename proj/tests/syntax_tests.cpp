#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/errors.hpp"
#include "sysmel/lexer.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/runtime.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace sysmel;

namespace {

std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Independent radix-conversion oracle (no lexer code involved).
BigInt radixOracle(int radix, const std::string& digits) {
    BigInt result = 0;
    for (char c : digits) {
        if (c == '_')
            continue;
        int digit = c >= '0' && c <= '9'   ? c - '0'
                  : c >= 'a' && c <= 'z'   ? c - 'a' + 10
                  : c >= 'A' && c <= 'Z'   ? c - 'A' + 10
                                           : -1;
        REQUIRE(digit >= 0);
        REQUIRE(digit < radix);
        result = result * radix + digit;
    }
    return result;
}

SequenceNode* parseText(Runtime& rt, const std::string& text) {
    return parseSource(rt, text, "test.sysmel");
}

AstNode* parseOne(Runtime& rt, const std::string& text) {
    SequenceNode* seq = parseText(rt, text);
    REQUIRE(seq->expressions.size() == 1);
    return seq->expressions[0];
}

std::string selectorText(const AstNode* selector) {
    auto* literal = dynamic_cast<const LiteralNode*>(selector);
    REQUIRE(literal != nullptr);
    auto* symbol = literal->value.as<SymbolObject>();
    REQUIRE(symbol != nullptr);
    return symbol->text;
}

void collectChildren(const AstNode* node, std::vector<const AstNode*>& out) {
    auto add = [&](const AstNode* child) {
        if (child)
            out.push_back(child);
    };
    switch (node->nodeKind) {
    case NodeKind::MessageSend: {
        auto* send = static_cast<const MessageSendNode*>(node);
        add(send->receiver);
        add(send->selector);
        for (auto* a : send->arguments)
            add(a);
        break;
    }
    case NodeKind::FunctionApplication: {
        auto* app = static_cast<const FunctionApplicationNode*>(node);
        add(app->functional);
        for (auto* a : app->arguments)
            add(a);
        break;
    }
    case NodeKind::Cascade: {
        auto* cascade = static_cast<const CascadeNode*>(node);
        add(cascade->receiver);
        for (const auto& m : cascade->messages) {
            add(m.selector);
            for (auto* a : m.arguments)
                add(a);
        }
        break;
    }
    case NodeKind::Sequence:
        for (auto* e : static_cast<const SequenceNode*>(node)->expressions)
            add(e);
        break;
    case NodeKind::Lambda: {
        auto* lambda = static_cast<const LambdaNode*>(node);
        for (const auto& a : lambda->argumentNodes)
            add(a.typeNode);
        add(lambda->resultTypeNode);
        add(lambda->body);
        break;
    }
    case NodeKind::Tuple:
        for (auto* e : static_cast<const TupleNode*>(node)->elements)
            add(e);
        break;
    case NodeKind::MakeDictionary:
        for (const auto& [k, v] : static_cast<const MakeDictionaryNode*>(node)->pairs) {
            add(k);
            add(v);
        }
        break;
    case NodeKind::MakeByteArray:
        for (auto* e : static_cast<const MakeByteArrayNode*>(node)->elements)
            add(e);
        break;
    case NodeKind::LiteralArray:
        for (auto* e : static_cast<const LiteralArrayNode*>(node)->elements)
            add(e);
        break;
    case NodeKind::Quote:
        add(static_cast<const QuoteNode*>(node)->inner);
        break;
    case NodeKind::QuasiQuote:
        add(static_cast<const QuasiQuoteNode*>(node)->inner);
        break;
    case NodeKind::QuasiUnquote:
        add(static_cast<const QuasiUnquoteNode*>(node)->inner);
        break;
    case NodeKind::Splice:
        add(static_cast<const SpliceNode*>(node)->inner);
        break;
    default:
        break;
    }
}

void checkPositionContainment(const AstNode* node) {
    std::vector<const AstNode*> children;
    collectChildren(node, children);
    for (const AstNode* child : children) {
        CHECK(child->position.startOffset >= node->position.startOffset);
        CHECK(child->position.endOffset <= node->position.endOffset);
        checkPositionContainment(child);
    }
}

} // namespace

TEST_CASE("tokenize: radix literals against an independent conversion oracle") {
    auto tokens = tokenize("2r1101_0011", "t");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].kind == TokenKind::Integer);
    CHECK(tokens[0].integerValue == radixOracle(2, "1101_0011"));
    CHECK(tokens[0].integerValue == 211);
    CHECK(tokens[0].suffix == LiteralSuffix::None);

    tokens = tokenize("16rFF1F_F2F3", "t");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].integerValue == radixOracle(16, "FF1F_F2F3"));
    CHECK(tokens[0].integerValue == BigInt("4280283891"));

    tokens = tokenize("36rZZ", "t");
    CHECK(tokens[0].integerValue == radixOracle(36, "ZZ"));
}

TEST_CASE("tokenize: empty input yields only the end token") {
    auto tokens = tokenize("", "t");
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].kind == TokenKind::End);
}

TEST_CASE("tokenize: multi-part symbol literal") {
    auto tokens = tokenize("#with:with:", "t");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].kind == TokenKind::Symbol);
    CHECK(tokens[0].stringValue == "with:with:");
}

TEST_CASE("tokenize: comments emit no tokens") {
    auto tokens = tokenize("1 ## this is ignored\n2", "t");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0].integerValue == 1);
    CHECK(tokens[1].integerValue == 2);
}

TEST_CASE("tokenize: literal suffixes") {
    auto tokens = tokenize("5sz 1u8 3i32 2.5f32", "t");
    REQUIRE(tokens.size() == 5);
    CHECK(tokens[0].suffix == LiteralSuffix::Size);
    CHECK(tokens[1].suffix == LiteralSuffix::U8);
    CHECK(tokens[2].suffix == LiteralSuffix::I32);
    CHECK(tokens[3].kind == TokenKind::Float);
    CHECK(tokens[3].suffix == LiteralSuffix::F32);
}

TEST_CASE("tokenize: negative literals and scientific notation") {
    auto tokens = tokenize("-1 . -3.5e-2", "t");
    CHECK(tokens[0].kind == TokenKind::Integer);
    CHECK(tokens[0].integerValue == -1);
    CHECK(tokens[2].kind == TokenKind::Float);
    CHECK(tokens[2].floatValue == doctest::Approx(-0.035));
}

TEST_CASE("tokenize: errors carry source positions") {
    CHECK_THROWS_AS(tokenize("\"unterminated", "t"), ParseError);
    CHECK_THROWS_AS(tokenize("'x", "t"), ParseError);
    CHECK_THROWS_AS(tokenize("2r3", "t"), ParseError); // digit invalid for radix
    CHECK_THROWS_AS(tokenize("$", "t"), ParseError);   // unknown character
    try {
        tokenize("1\n  \"oops", "t");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position.line == 2);
    }
}

TEST_CASE("tokenize: namespaced identifier paths") {
    auto tokens = tokenize("RawTuple::slotAt:put:", "t");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].kind == TokenKind::Identifier);
    CHECK(tokens[0].text == "RawTuple::slotAt:put:");

    // :: followed by operator characters is a low-precedence operator.
    tokens = tokenize("2 ::+ 3", "t");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[1].kind == TokenKind::LowPrecedenceOperator);
    CHECK(tokens[1].text == "::+");
}

TEST_CASE("parse: binary operators have uniform left-associative precedence") {
    Runtime rt;
    auto* outer = dynamic_cast<MessageSendNode*>(parseOne(rt, "2 + 3 * 5."));
    REQUIRE(outer != nullptr);
    CHECK(selectorText(outer->selector) == "*");
    auto* inner = dynamic_cast<MessageSendNode*>(outer->receiver);
    REQUIRE(inner != nullptr);
    CHECK(selectorText(inner->selector) == "+");
    auto* two = dynamic_cast<LiteralNode*>(inner->receiver);
    REQUIRE(two != nullptr);
    CHECK(rt.integerValueOf(two->value) == 2);
}

TEST_CASE("parse: binary uniformity property over random operator pairs") {
    Runtime rt;
    const std::vector<std::string> operators{"+", "-", "*", "/", "<", ">", "&", "|", "%", "~="};
    std::mt19937 rng(20260823);
    std::uniform_int_distribution<size_t> pick(0, operators.size() - 1);
    for (int i = 0; i < 50; ++i) {
        std::string a = operators[pick(rng)];
        std::string b = operators[pick(rng)];
        std::string source = "x " + a + " y " + b + " z.";
        auto* outer = dynamic_cast<MessageSendNode*>(parseOne(rt, source));
        REQUIRE(outer != nullptr);
        CHECK(selectorText(outer->selector) == b);
        auto* inner = dynamic_cast<MessageSendNode*>(outer->receiver);
        REQUIRE(inner != nullptr);
        CHECK(selectorText(inner->selector) == a);
        auto* z = dynamic_cast<IdentifierNode*>(outer->arguments.at(0));
        REQUIRE(z != nullptr);
        CHECK(z->name->text == "z");
    }
}

TEST_CASE("parse: cascade on a keyword-send receiver") {
    Runtime rt;
    auto* cascade = dynamic_cast<CascadeNode*>(
        parseOne(rt, "(Array new: 3sz) at: 0sz put: 1; at: 1sz put: 2; yourself."));
    REQUIRE(cascade != nullptr);
    REQUIRE(cascade->messages.size() == 3);
    CHECK(selectorText(cascade->messages[0].selector) == "at:put:");
    CHECK(selectorText(cascade->messages[2].selector) == "yourself");
    auto* receiver = dynamic_cast<MessageSendNode*>(cascade->receiver);
    REQUIRE(receiver != nullptr);
    CHECK(selectorText(receiver->selector) == "new:");
}

TEST_CASE("parse: quote and quasi-quote forms") {
    Runtime rt;
    auto* quote = dynamic_cast<QuoteNode*>(parseOne(rt, "`'a."));
    REQUIRE(quote != nullptr);
    auto* inner = dynamic_cast<IdentifierNode*>(quote->inner);
    REQUIRE(inner != nullptr);
    CHECK(inner->name->text == "a");

    auto* quasi = dynamic_cast<QuasiQuoteNode*>(
        parseOne(rt, "``(a `,unarySelectorNode (`@callArgumentNodes))."));
    REQUIRE(quasi != nullptr);
}

TEST_CASE("parse: lambda header with typed argument and result type") {
    Runtime rt;
    auto* lambda = dynamic_cast<LambdaNode*>(parseOne(rt, "{:(Int32)x :y :: Int32 | x + y}."));
    REQUIRE(lambda != nullptr);
    REQUIRE(lambda->argumentNodes.size() == 2);
    CHECK(lambda->argumentNodes[0].name->text == "x");
    REQUIRE(lambda->argumentNodes[0].typeNode != nullptr);
    auto* typeNode = dynamic_cast<IdentifierNode*>(lambda->argumentNodes[0].typeNode);
    REQUIRE(typeNode != nullptr);
    CHECK(typeNode->name->text == "Int32");
    CHECK(lambda->argumentNodes[1].typeNode == nullptr);
    REQUIRE(lambda->resultTypeNode != nullptr);
}

TEST_CASE("parse: keyword message without receiver") {
    Runtime rt;
    auto* send = dynamic_cast<MessageSendNode*>(parseOne(rt, "with: #x with: 42."));
    REQUIRE(send != nullptr);
    CHECK(send->receiver == nullptr);
    CHECK(selectorText(send->selector) == "with:with:");
    REQUIRE(send->arguments.size() == 2);
}

TEST_CASE("parse: bracket-send forms require adjacency") {
    Runtime rt;
    auto* bracket = dynamic_cast<MessageSendNode*>(parseOne(rt, "Int32[5sz]."));
    REQUIRE(bracket != nullptr);
    CHECK(selectorText(bracket->selector) == "[]:");

    auto* brace = dynamic_cast<MessageSendNode*>(parseOne(rt, "doSomething{5sz}."));
    REQUIRE(brace != nullptr);
    CHECK(selectorText(brace->selector) == "{}:");

    auto* bytes = dynamic_cast<MessageSendNode*>(parseOne(rt, "doSomething#[1u8]."));
    REQUIRE(bytes != nullptr);
    CHECK(selectorText(bytes->selector) == "#[]:");

    // With a space the byte array is a separate statement.
    SequenceNode* seq = parseText(rt, "doSomething #[1u8].");
    CHECK(seq->expressions.size() == 2);
}

TEST_CASE("parse: juxtaposed function application does not require adjacency") {
    Runtime rt;
    auto* app = dynamic_cast<FunctionApplicationNode*>(parseOne(rt, "malloc(16sz)."));
    REQUIRE(app != nullptr);
    REQUIRE(app->arguments.size() == 1);

    auto* spaced = dynamic_cast<FunctionApplicationNode*>(
        parseOne(rt, "{:(Int32)x :y :: Int32 | x + y} (1i32, 3 i32)."));
    REQUIRE(spaced != nullptr);
    CHECK(spaced->arguments.size() == 2);
    CHECK(dynamic_cast<LambdaNode*>(spaced->functional) != nullptr);
}

TEST_CASE("parse: tuples, dictionaries, byte arrays, literal arrays") {
    Runtime rt;
    auto* tuple = dynamic_cast<TupleNode*>(parseOne(rt, "1, 2, 3."));
    REQUIRE(tuple != nullptr);
    CHECK(tuple->elements.size() == 3);

    auto* dict = dynamic_cast<MakeDictionaryNode*>(
        parseOne(rt, "#{first: 1. #second : 2 . \"third\": 3}."));
    REQUIRE(dict != nullptr);
    CHECK(dict->pairs.size() == 3);

    auto* byteArray = dynamic_cast<MakeByteArrayNode*>(parseOne(rt, "#[1u8 . (2 + 3) asUInt8]."));
    REQUIRE(byteArray != nullptr);
    CHECK(byteArray->elements.size() == 2);

    auto* literalArray = dynamic_cast<LiteralArrayNode*>(parseOne(rt, "#(1 2 test (2.5 3))."));
    REQUIRE(literalArray != nullptr);
    REQUIRE(literalArray->elements.size() == 4);
    auto* bareWord = dynamic_cast<LiteralNode*>(literalArray->elements[2]);
    REQUIRE(bareWord != nullptr);
    CHECK(bareWord->value.isA<SymbolObject>());
    CHECK(dynamic_cast<LiteralArrayNode*>(literalArray->elements[3]) != nullptr);
}

TEST_CASE("parse: assignment is a right-associative := message send") {
    Runtime rt;
    auto* outer = dynamic_cast<MessageSendNode*>(parseOne(rt, "a := b := 2."));
    REQUIRE(outer != nullptr);
    CHECK(selectorText(outer->selector) == ":=");
    auto* inner = dynamic_cast<MessageSendNode*>(outer->arguments.at(0));
    REQUIRE(inner != nullptr);
    CHECK(selectorText(inner->selector) == ":=");
}

TEST_CASE("unparse: simple forms") {
    Runtime rt;
    auto* literal = rt.make<LiteralNode>();
    literal->value = rt.makeInteger(211);
    CHECK(unparse(literal) == "211");

    auto* quote = dynamic_cast<QuoteNode*>(parseOne(rt, "`'a."));
    CHECK(unparse(quote) == "`'a");
}

TEST_CASE("full syntax fixture: parses, statement count, round-trip, positions") {
    Runtime rt;
    std::string source = readFile(FIXTURE_DIR "/syntax_postcard.sysmel");
    SequenceNode* first = parseText(rt, source);
    CHECK(first->expressions.size() == 38);

    std::string emitted = unparse(first);
    SequenceNode* second = parseText(rt, emitted);
    CHECK(structurallyEqual(first, second));

    checkPositionContainment(first);
}

TEST_CASE("round-trip property over assorted programs") {
    Runtime rt;
    const std::vector<std::string> programs{
        "2 + 3 * 5.",
        "(Array new: 3sz) at: 0sz put: 1; at: 1sz put: 2; yourself.",
        "with: #x with: 42.",
        "a := 2.",
        "2 ::+ 3.",
        "{ let: #x with: 2 . x }.",
        "{:(Int32)x :y :: Int32 | x + y} (1i32, 3 i32).",
        "#{first: 1. #second : 2}.",
        "#[1u8 . (2 + 3) asUInt8].",
        "#(1 2 test (2.5 3)).",
        "`'a.",
        "``(a `,unarySelectorNode (`@callArgumentNodes)).",
        "Int32[5sz].",
        "doSomething{5sz}.",
        "doSomething#[1u8].",
        "-3.5e-2.",
        "\"Hello World\\n\\r\".",
        "'A'. '\\''.",
        "16rFF1F_F2F3.",
        "x | y & z.",
    };
    for (const auto& program : programs) {
        CAPTURE(program);
        SequenceNode* first = parseText(rt, program);
        SequenceNode* second = parseText(rt, unparse(first));
        CHECK(structurallyEqual(first, second));
    }
}

TEST_CASE("ast dump: one node per line with position markers") {
    Runtime rt;
    AstNode* node = parseOne(rt, "2 + 3.");
    std::string dump = dumpAst(node);
    CHECK(dump.find("MessageSend") != std::string::npos);
    CHECK(dump.find("@1:") != std::string::npos);
}
