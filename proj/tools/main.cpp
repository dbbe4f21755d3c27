#include "sysmel/analyzer.hpp"
#include "sysmel/bytecode.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/hir.hpp"
#include "sysmel/image.hpp"
#include "sysmel/lexer.hpp"
#include "sysmel/mir.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/program_entity.hpp"
#include "sysmel/runtime.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace sysmel;

namespace {

struct DriverConfig {
    std::string inputFile;
    std::string expression;
    bool haveExpression = false;
    bool repl = false;
    std::string engine = "interp";

    bool dumpTokens = false;
    bool dumpAstFlag = false;
    bool dumpAnalyzedAst = false;
    bool dumpBytecode = false;
    bool dumpHirFlag = false;
    bool dumpHirOpt = false;
    bool dumpMir = false;
    bool dumpAsm = false;

    std::string emitImagePath;
    std::string loadImagePath;
    std::string roots = "main";
    bool stripAst = false;

    bool noConstprop = false;
    bool noSimplifyCfg = false;
    bool noInline = false;
    int inlineThreshold = 24;
};

ExecutionEngine engineFromName(const std::string& name) {
    if (name == "bytecode")
        return ExecutionEngine::Bytecode;
    if (name == "hir")
        return ExecutionEngine::Hir;
    return ExecutionEngine::TreeWalk;
}

std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw EvaluationError("cannot open file: " + path);
    std::ostringstream contents;
    contents << in.rdbuf();
    return contents.str();
}

void printTokens(const std::vector<Token>& tokens) {
    for (const Token& token : tokens) {
        std::cout << tokenKindName(token.kind);
        if (!token.text.empty())
            std::cout << " '" << token.text << "'";
        std::cout << " @" << token.position.line << ":" << token.position.column << "\n";
    }
}

std::vector<std::pair<std::string, FunctionEntityObject*>> namedFunctions(Runtime& rt) {
    std::vector<std::pair<std::string, FunctionEntityObject*>> result;
    for (auto& [name, member] : rt.globalNamespace()->members)
        if (auto* entity = member.as<FunctionEntityObject>())
            result.emplace_back(name->text, entity);
    return result;
}

/// Per-function stage dumps, applied to every named function of the
/// program in name order.
void dumpFunctionStages(Runtime& rt, const DriverConfig& config) {
    Analyzer analyzer(rt);
    for (auto& [name, entity] : namedFunctions(rt)) {
        FunctionDefinitionObject* definition = entity->definition;
        if (!definition)
            continue;
        if (config.dumpAnalyzedAst) {
            analyzer.ensureAnalyzed(definition);
            std::cout << "== analyzed " << name << " ==\n"
                      << dumpAst(definition->analyzedBody) << "\n";
        }
        if (config.dumpBytecode)
            std::cout << "== bytecode " << name << " ==\n"
                      << disassemble(*compileToBytecode(rt, definition));
        if (config.dumpHirFlag)
            std::cout << "== hir " << name << " ==\n" << dumpHir(rt, *buildHir(rt, definition));
        if (config.dumpHirOpt)
            std::cout << "== hir-opt " << name << " ==\n"
                      << dumpHir(rt, *optimizeHir(rt, definition));
        if (config.dumpMir || config.dumpAsm) {
            MirFunction mir = lowerToMir(rt, *optimizeHir(rt, definition));
            fuseCompareBranch(mir);
            if (config.dumpMir)
                std::cout << "== mir " << name << " ==\n" << emitListing(rt, mir);
            if (config.dumpAsm) {
                MirFunction allocated = allocateRegisters(mir);
                computeFrameLayout(allocated);
                std::cout << "== asm " << name << " ==\n" << emitListing(rt, allocated);
            }
        }
    }
}

void emitImage(Runtime& rt, const DriverConfig& config) {
    FunctionEntityObject* main = nullptr;
    for (auto& [name, entity] : namedFunctions(rt))
        if (name == "main")
            main = entity;
    std::vector<ObjectValue> roots;
    if (main)
        roots.push_back(ObjectValue::heap(main));
    if (config.roots == "all")
        roots.push_back(ObjectValue::heap(rt.globalNamespace()));
    else if (!main)
        throw EvaluationError("--emit-image with --roots main requires a main function");
    std::vector<uint8_t> bytes = serializeImage(rt, roots, config.stripAst);
    std::ofstream out(config.emitImagePath, std::ios::binary);
    if (!out)
        throw EvaluationError("cannot write image: " + config.emitImagePath);
    out.write(reinterpret_cast<const char*>(bytes.data()), long(bytes.size()));
}

int runLoadedImage(Runtime& rt, const DriverConfig& config) {
    std::string raw = readFile(config.loadImagePath);
    std::vector<uint8_t> bytes(raw.begin(), raw.end());
    LoadedImage loaded = loadImage(rt, bytes);
    dumpFunctionStages(rt, config);
    for (const ObjectValue& root : loaded.roots)
        if (auto* entity = root.as<FunctionEntityObject>())
            if (entity->definition && entity->definition->arity() == 0)
                rt.call(root, {});
    if (!config.emitImagePath.empty()) {
        std::vector<uint8_t> again = serializeImage(rt, loaded.roots, config.stripAst);
        std::ofstream out(config.emitImagePath, std::ios::binary);
        if (!out)
            throw EvaluationError("cannot write image: " + config.emitImagePath);
        out.write(reinterpret_cast<const char*>(again.data()), long(again.size()));
    }
    return 0;
}

int runRepl(Runtime& rt) {
    Analyzer analyzer(rt);
    std::string line;
    std::cerr << "sysmel> " << std::flush;
    while (std::getline(std::cin, line)) {
        if (!line.empty()) {
            try {
                SequenceNode* parsed = parseSource(rt, line, "<repl>");
                ObjectValue result =
                    analyzer.analyzeAndEvaluate(parsed, rt.globalEnvironment());
                if (result != rt.voidValue)
                    std::cout << rt.printString(result) << "\n";
            } catch (const std::exception& error) {
                // A failed statement leaves the session usable.
                std::cerr << "error: " << error.what() << "\n";
            }
        }
        std::cerr << "sysmel> " << std::flush;
    }
    return 0;
}

int runDriver(const DriverConfig& config) {
    Runtime rt;
    rt.engine = engineFromName(config.engine);
    rt.optimization.constantPropagation = !config.noConstprop;
    rt.optimization.simplifyControlFlow = !config.noSimplifyCfg;
    rt.optimization.inlineCalls = !config.noInline;
    rt.optimization.inlineThreshold = config.inlineThreshold;

    if (config.repl)
        return runRepl(rt);
    if (!config.loadImagePath.empty())
        return runLoadedImage(rt, config);

    std::string source;
    std::string fileName;
    if (config.haveExpression) {
        source = config.expression;
        fileName = "<expression>";
    } else {
        source = readFile(config.inputFile);
        fileName = config.inputFile;
    }

    if (config.dumpTokens)
        printTokens(tokenize(source, fileName));
    SequenceNode* parsed = parseSource(rt, source, fileName);
    if (config.dumpAstFlag)
        std::cout << dumpAst(parsed) << "\n";

    Analyzer analyzer(rt);
    ObjectValue result = analyzer.analyzeAndEvaluate(parsed, rt.globalEnvironment());
    if (config.haveExpression && result != rt.voidValue)
        std::cout << rt.printString(result) << "\n";

    dumpFunctionStages(rt, config);
    if (!config.emitImagePath.empty())
        emitImage(rt, config);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    DriverConfig config;
    CLI::App app{"sysmel language kernel: interpreter, bytecode VM and optimizing pipeline"};

    app.add_option("file", config.inputFile, "program file to run");
    auto* exprOpt = app.add_option("-e", config.expression, "evaluate an inline expression");
    app.add_flag("--repl", config.repl, "interactive session");
    app.add_option("--engine", config.engine, "execution engine")
        ->check(CLI::IsMember({"interp", "bytecode", "hir"}));

    app.add_flag("--dump-tokens", config.dumpTokens, "print the token stream");
    app.add_flag("--dump-ast", config.dumpAstFlag, "print the parse tree");
    app.add_flag("--dump-analyzed-ast", config.dumpAnalyzedAst, "print analyzed function bodies");
    app.add_flag("--dump-bytecode", config.dumpBytecode, "print compiled bytecode");
    app.add_flag("--dump-hir", config.dumpHirFlag, "print SSA form before optimization");
    app.add_flag("--dump-hir-opt", config.dumpHirOpt, "print SSA form after optimization");
    app.add_flag("--dump-mir", config.dumpMir, "print the machine-level IR");
    app.add_flag("--dump-asm", config.dumpAsm, "print the post-allocation listing");

    app.add_option("--emit-image", config.emitImagePath, "serialize the program to a file");
    app.add_option("--load-image", config.loadImagePath, "load and run a serialized image");
    app.add_option("--roots", config.roots, "image root set")
        ->check(CLI::IsMember({"main", "all"}));
    app.add_flag("--strip-ast", config.stripAst, "omit analyzed bodies from emitted images");

    app.add_flag("--no-constprop", config.noConstprop, "disable constant propagation");
    app.add_flag("--no-simplify-cfg", config.noSimplifyCfg, "disable control-flow simplification");
    app.add_flag("--no-inline", config.noInline, "disable inlining");
    app.add_option("--inline-threshold", config.inlineThreshold,
                   "largest callee size considered for inlining");

    CLI11_PARSE(app, argc, argv);
    config.haveExpression = exprOpt->count() > 0;

    int inputs = int(!config.inputFile.empty()) + int(config.haveExpression) +
                 int(config.repl) + int(!config.loadImagePath.empty());
    if (inputs != 1) {
        std::cerr << "error: expected exactly one input (file, -e, --repl or --load-image)\n";
        return 1;
    }

    try {
        return runDriver(config);
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
}
