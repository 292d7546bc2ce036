fn main() {
    std::process::exit(treecut_cli::run(std::env::args_os()));
}
