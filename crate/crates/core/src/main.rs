fn main() {
    plugin_rates::cli::install_interrupt_handler();
    std::process::exit(plugin_rates::cli::run(std::env::args_os()));
}
