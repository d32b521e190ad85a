fn main() {
    seqrank::cli::init_logging();
    std::process::exit(seqrank::cli::run_command(std::env::args_os()));
}
