fn main() {
    std::process::exit(ppimesh_cli::run_with_args(std::env::args_os()));
}
