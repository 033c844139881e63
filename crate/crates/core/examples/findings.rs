use critiq_core::analyzers::{all_rules, run_rules, RuleConfig};
use critiq_core::{parse_document, DesignContext};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let doc = parse_document(&std::fs::read_to_string(&args[1]).unwrap()).unwrap();
    let ctx = args
        .get(2)
        .map(|p| DesignContext::from_json(&std::fs::read_to_string(p).unwrap()).unwrap())
        .unwrap_or_default();
    for f in run_rules(&doc, &ctx, &all_rules(), &RuleConfig::default()) {
        println!(
            "{:<22} {:<18} {:<8} {}",
            f.rule, f.node_id, f.severity, f.message
        );
    }
}
