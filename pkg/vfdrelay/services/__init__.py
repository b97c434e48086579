"""Link-level services: channel, codec, relay selection, detection, analysis and the sweep engine."""
